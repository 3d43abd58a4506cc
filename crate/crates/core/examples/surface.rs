//! Energy surfaces of the betaplane: ellipses `xi2^2 + x2^2 = 1/tau - 1`.

use ocean_rays::numeric::linspace;
use ocean_rays::reduced::{bracket, energy_surface_points, BracketOptions};
use ocean_rays::Profiles;

fn main() -> ocean_rays::Result<()> {
    let profiles = Profiles::betaplane(1.0)?;
    for tau in [0.8, 0.5, 0.25] {
        let band = bracket(tau, 1.0, 0.0, &profiles, &BracketOptions::default())?;
        let pts = energy_surface_points(tau, 1.0, &linspace(-2.0, 2.0, 81), &profiles);
        let widest = pts.iter().map(|p| p.xi2_plus).fold(0.0, f64::max);
        println!(
            "tau = {tau}: x2 in [{:+.6}, {:+.6}] (expected +-{:.6}), max xi2 {widest:.4}, {} grid points",
            band.xmin,
            band.xmax,
            (1.0 / tau - 1.0f64).sqrt(),
            pts.len()
        );
    }
    Ok(())
}
