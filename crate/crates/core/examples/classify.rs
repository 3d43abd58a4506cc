//! Classifies a handful of seeds: periodic betaplane circles, a fixed point
//! and an asymptotic approach to a zero of the current.

use ocean_rays::classify::{classify, ClassifyOptions};
use ocean_rays::profiles::{make_betaplane, make_signed_zonal};
use ocean_rays::{PhasePoint, Profiles};

fn main() -> ocean_rays::Result<()> {
    let opts = ClassifyOptions::default();
    let beta = Profiles::betaplane(1.0)?;
    let signed = Profiles::new(make_signed_zonal(0.3, 2.0)?, make_betaplane(1.0)?);
    let seeds = [
        ("betaplane", beta, PhasePoint::new(0.0, 1.0, 0.0, 1.0)?),
        ("betaplane", beta, PhasePoint::new(0.0, 2.0, 0.5, -0.3)?),
        ("betaplane", beta, PhasePoint::new(0.0, 1.0, 0.0, 0.0)?),
        ("signed zonal", signed, PhasePoint::new(0.0, -2.0, -0.5, 1.9)?),
    ];
    for (name, profiles, p) in seeds {
        let c = classify(&p, &profiles, &opts)?;
        println!(
            "{name:>12} {:?}: tau = {:.6}, margin = {:.3e}, {:?}",
            p.as_array(),
            c.tau,
            c.margin.min(),
            c.class
        );
    }
    Ok(())
}
