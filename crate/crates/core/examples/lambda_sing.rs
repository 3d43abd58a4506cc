//! Builds a zero-energy seed over the negative lobe of a signed current and
//! follows its asymptotic approach to the lobe edge.

use ocean_rays::classify::asymptotic_rates;
use ocean_rays::dynamics::{integrate, IntegrateOptions, SampleSpec};
use ocean_rays::profiles::{make_betaplane, make_signed_zonal};
use ocean_rays::trapping::{h_of_xi1, lambda_sing_point, negative_lobe};
use ocean_rays::Profiles;

fn main() -> ocean_rays::Result<()> {
    let profiles = Profiles::new(make_signed_zonal(0.3, 2.0)?, make_betaplane(1.0)?);
    let lobe = negative_lobe(&profiles)?;
    let xi1 = -2.0;
    let h = h_of_xi1(xi1, &lobe, &profiles)?;
    println!("lobe ({}, {}), threshold N = {:.6}, h(xi1) = {h:.6}", lobe.y1, lobe.y2, lobe.n);

    let p0 = lambda_sing_point(0.0, xi1, 0.5 * (h + lobe.y2), &lobe, &profiles)?;
    let opts = IntegrateOptions::default().with_samples(SampleSpec::Uniform { count: 4001 });
    let traj = integrate(&p0, 1000.0, &opts, &profiles)?;
    let end = traj.last().point;
    println!("seed {:?}, final x2 = {:.3e}, xi2 = {:.3}", p0.as_array(), end.x2(), end.xi2());

    let rates = asymptotic_rates(&traj, lobe.y2)?;
    println!(
        "x2 - y2 ~ {:.4} t^{:.4}, xi2 ~ {:.6} t, consistency {:.2e}",
        rates.c1,
        rates.exponent,
        rates.c2,
        rates.consistency(lobe.y2, &profiles)
    );
    Ok(())
}
