//! Bohr-Sommerfeld levels of `xi2^2 + b(x2)^2` against the harmonic
//! oscillator values `beta eps (2n + 1)`.

use ocean_rays::numeric::QuadTolerance;
use ocean_rays::profiles::{make_betaplane, CoriolisProfile};
use ocean_rays::spectral::{bohr_sommerfeld, eigenvalues_below};

fn main() -> ocean_rays::Result<()> {
    let tol = QuadTolerance::rel(1e-12);
    let beta = make_betaplane(2.0)?;
    for n in [0, 1, 5, 50] {
        let l = bohr_sommerfeld(n, 0.1, &beta, tol)?;
        println!("betaplane n = {n:>2}: {l:.12} vs {:.12}", 2.0 * 0.1 * (2.0 * n as f64 + 1.0));
    }
    let quad = CoriolisProfile::Quadratic { curvature: 1.0, offset: 0.5 };
    for eps in [0.1, 0.01] {
        let levels = eigenvalues_below(4.0, eps, &quad, QuadTolerance::default())?;
        println!("quadratic, eps = {eps}: {} levels below 4, lowest {:.6}", levels.len(), levels[0]);
    }
    Ok(())
}
