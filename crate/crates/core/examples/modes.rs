//! The polarization basis of the shallow-water symbol at one point.

use ocean_rays::modes::{polarization_matrices, polarization_residuals};
use ocean_rays::profiles::make_betaplane;

fn main() -> ocean_rays::Result<()> {
    let m = polarization_matrices(0.4, -0.7, 1.3, &make_betaplane(1.0)?)?;
    println!("tau = {:?}", m.taus());
    println!("P0 = {:.4}", m.p0);
    println!("|Q0 P0 - I| = {:.2e}", m.identity_defect());
    println!("|det P0| = {:.12} vs {:.12}", m.det_p0().norm(), m.det_formula());
    println!("eigenvector residuals {:?}", polarization_residuals(&m));
    Ok(())
}
