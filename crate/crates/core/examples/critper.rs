//! The capture integral on betaplane bands: zero on the trapped energy
//! `tau = beta/(2 xi1)`, and the drift it predicts elsewhere.

use ocean_rays::numeric::QuadTolerance;
use ocean_rays::reduced::{bracket, period, BracketOptions};
use ocean_rays::trapping::{critper, critper_drift};
use ocean_rays::Profiles;

fn main() -> ocean_rays::Result<()> {
    let profiles = Profiles::betaplane(1.0)?;
    let tol = QuadTolerance::rel(1e-12);
    for tau in [0.5, 0.4, 0.3, 0.2] {
        let band = bracket(tau, 1.0, 0.0, &profiles, &BracketOptions::default())?;
        let t = period(&band, tol)?;
        println!(
            "tau = {tau}: band [{:+.6}, {:+.6}], period {:.6}, critper {:+.3e}, drift {:+.9}",
            band.xmin,
            band.xmax,
            t,
            critper(&band, tol)?,
            critper_drift(&band, t, tol)?
        );
    }
    Ok(())
}
