//! Integrates the trapped betaplane circle and a drifting circle, and
//! prints how far x1 wanders.

use ocean_rays::dynamics::{integrate, wind_up_x1, IntegrateOptions, SampleSpec};
use ocean_rays::ode::Tolerances;
use ocean_rays::{PhasePoint, Profiles};

fn main() -> ocean_rays::Result<()> {
    let profiles = Profiles::betaplane(1.0)?;
    let opts = IntegrateOptions::default()
        .with_tolerances(Tolerances::new(1e-12, 1e-12))
        .with_samples(SampleSpec::Uniform { count: 2001 });

    for (label, xi2) in [("trapped r = 1", 1.0), ("drifting r = sqrt 2", 2f64.sqrt())] {
        let p0 = PhasePoint::new(0.0, 1.0, 0.0, xi2)?;
        let traj = integrate(&p0, 1000.0, &opts, &profiles)?;
        let x1 = wind_up_x1(&traj);
        let (lo, hi) = x1
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, x)| (a.min(x), b.max(x)));
        println!(
            "{label:>20}: x1 in [{lo:.3e}, {hi:.3e}], x1(T)/T = {:.6}, energy drift {:.1e}",
            x1.last().unwrap().1 / traj.duration(),
            traj.energy_drift
        );
    }
    Ok(())
}
