//! Rossby particles on trapped circles stay in a box; Poincare particles
//! sampled in the same box leave it at the group speed.

use ocean_rays::transport::{
    mass_in_box, propagate_snapshots, sample_initial, trapped_circle_ensemble, Mode, PhaseBox,
    SamplingSpec, SpatialBox, TransportOptions,
};
use ocean_rays::Profiles;

fn main() -> ocean_rays::Result<()> {
    let profiles = Profiles::betaplane(1.0)?;
    let k = SpatialBox { x1: (-2.0, 2.0), x2: (-3.0, 3.0) };
    let times = [0.0, 1.0, 2.0, 4.0, 8.0, 1000.0];
    let opts = TransportOptions::default();

    let rossby = trapped_circle_ensemble(2000, (-0.5, 0.5), (1.0, 2.0), 0, &profiles)?;
    let poincare = sample_initial(
        &SamplingSpec {
            region: PhaseBox { x1: (-0.5, 0.5), xi1: (1.0, 2.0), x2: (-0.5, 0.5), xi2: (-0.5, 0.5) },
            count: 2000,
            mode: Mode::PoincarePlus,
            seed: 0,
            tol_sigma: 1e-6,
            retry_budget: 0,
        },
        &profiles,
    )?;
    let r = propagate_snapshots(&rossby, &times, &profiles, &opts)?;
    let p = propagate_snapshots(&poincare, &times, &profiles, &opts)?;
    for (a, b) in r.iter().zip(&p) {
        println!(
            "t = {:>6}: rossby mass {:.4}, poincare mass {:.4}",
            a.time,
            mass_in_box(a, &k),
            mass_in_box(b, &k)
        );
    }
    Ok(())
}
