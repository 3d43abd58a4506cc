//! Roots of the betaplane dispersion cubic and the Rossby-root asymptotics.

use ocean_rays::spectral::{dispersion_roots, rossby_root_asymptotics};

fn main() -> ocean_rays::Result<()> {
    for xi1 in [0.5, 1.0, 2.0] {
        let r = dispersion_roots(xi1, 1, 0.1, 1.0)?;
        let (sum, prod) = r.vieta_defects();
        println!(
            "xi1 = {xi1}: tau- {:+.9}, tau_R {:+.9}, tau+ {:+.9}, vieta ({sum:.1e}, {prod:.1e})",
            r.tau_minus, r.tau_r, r.tau_plus
        );
    }
    for eps in [0.1, 0.05, 0.025, 0.0125] {
        println!("eps = {eps}: relative Rossby-root gap {:.3e}", rossby_root_asymptotics(1.0, 2, eps, 1.0)?);
    }
    Ok(())
}
