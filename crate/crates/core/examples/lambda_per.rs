//! Samples the periodic trapping function for a narrow jet on the
//! betaplane, finds its root and checks that the root's ray is trapped.

use ocean_rays::numeric::QuadTolerance;
use ocean_rays::profiles::{make_betaplane, make_bump};
use ocean_rays::trapping::{drift_velocity, lambda_per_g, lambda_per_root, LambdaPerSetup, TrappingOptions};
use ocean_rays::Profiles;

fn main() -> ocean_rays::Result<()> {
    let profiles = Profiles::new(make_bump(0.0, 0.4, 0.5)?, make_betaplane(1.0)?);
    let setup = LambdaPerSetup::auto(&profiles)?;
    let tol = QuadTolerance::default();
    println!("eta = {}, delta = {}", setup.eta, setup.delta);
    for xi1 in [1.0, 1.2, 1.4, 1.6, 2.0, 5.0, 20.0, 50.0] {
        println!("G({xi1:>4}) = {:+.6e}", lambda_per_g(xi1, &setup, &profiles, tol)?);
    }
    let root = lambda_per_root(&setup, &profiles, 200, 1e-7, tol)?;
    let seed = setup.seed(root.xi1, &profiles)?;
    let verdict = drift_velocity(&seed, &profiles, &TrappingOptions::default())?;
    println!(
        "root xi1 = {:.9} in [{:.9}, {:.9}], slope {:.4}, seed drift {:+.2e}",
        root.xi1, root.bracket.0, root.bracket.1, root.slope, verdict.drift
    );
    Ok(())
}
