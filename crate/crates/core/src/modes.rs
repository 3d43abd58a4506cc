//! The 3x3 principal-symbol matrix of the shallow-water system and its
//! polarization basis: Poincare modes `tau = ±sqrt(xi1^2 + xi2^2 + b^2)` and
//! the Rossby mode at eigenvalue zero.

use crate::error::{Error, Result};
use crate::profiles::CoriolisProfile;
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type CMatrix3 = Matrix3<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(&self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `A0 = [[0, i xi1, i xi2], [i xi1, 0, -b], [i xi2, b, 0]]`.
pub fn a0(x2: f64, xi1: f64, xi2: f64, b: &CoriolisProfile) -> CMatrix3 {
    let bv = b.value(x2);
    let z = c(0.0, 0.0);
    CMatrix3::new(
        z,
        c(0.0, xi1),
        c(0.0, xi2),
        c(0.0, xi1),
        z,
        c(-bv, 0.0),
        c(0.0, xi2),
        c(bv, 0.0),
        z,
    )
}

/// `±sqrt(xi1^2 + xi2^2 + b(x2)^2)`.
pub fn poincare_symbol(branch: Branch, x2: f64, xi1: f64, xi2: f64, b: &CoriolisProfile) -> f64 {
    let bv = b.value(x2);
    branch.sign() * (xi1 * xi1 + xi2 * xi2 + bv * bv).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeMatrices {
    pub a0: CMatrix3,
    /// Columns: the `tau_-`, Rossby and `tau_+` polarizations.
    pub p0: CMatrix3,
    pub q0: CMatrix3,
    pub x2: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub b: f64,
}

impl ModeMatrices {
    /// `s = sqrt(xi1^2 + xi2^2 + b^2)`.
    pub fn s(&self) -> f64 {
        (self.xi1 * self.xi1 + self.xi2 * self.xi2 + self.b * self.b).sqrt()
    }

    /// Eigenvalues `tau_-, 0, tau_+` in column order.
    pub fn taus(&self) -> [f64; 3] {
        [-self.s(), 0.0, self.s()]
    }

    /// `max |(Q0 P0 - I)_jk|`.
    pub fn identity_defect(&self) -> f64 {
        (self.q0 * self.p0 - CMatrix3::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn det_p0(&self) -> Complex64 {
        self.p0.determinant()
    }

    /// `2 (xi^2 + b^2)^{3/2} / ((xi1^2 + b^2) |xi1|)`.
    pub fn det_formula(&self) -> f64 {
        let s = self.s();
        2.0 * s * s * s / ((self.xi1 * self.xi1 + self.b * self.b) * self.xi1.abs())
    }
}

pub fn polarization_matrices(
    x2: f64,
    xi1: f64,
    xi2: f64,
    b: &CoriolisProfile,
) -> Result<ModeMatrices> {
    if xi1 == 0.0 {
        return Err(Error::InvalidArgument("polarization needs xi1 != 0".into()));
    }
    let bv = b.value(x2);
    let s = (xi1 * xi1 + xi2 * xi2 + bv * bv).sqrt();
    let d = xi1 * xi1 + bv * bv;
    let one = c(1.0, 0.0);
    let p0 = CMatrix3::new(
        c(-xi1 * s, -xi2 * bv) / d,
        c(0.0, -bv / xi1),
        c(xi1 * s, -xi2 * bv) / d,
        one,
        c(-xi2 / xi1, 0.0),
        one,
        c(xi1 * xi2, bv * s) / d,
        one,
        c(xi1 * xi2, -bv * s) / d,
    );
    let k = 1.0 / (2.0 * s * s);
    let q0 = CMatrix3::new(
        c(-xi1 * s, bv * xi2),
        c(d, 0.0),
        c(xi1 * xi2, -bv * s),
        c(0.0, 2.0 * bv * xi1),
        c(-2.0 * xi1 * xi2, 0.0),
        c(2.0 * xi1 * xi1, 0.0),
        c(xi1 * s, bv * xi2),
        c(d, 0.0),
        c(xi1 * xi2, bv * s),
    ) * c(k, 0.0);
    Ok(ModeMatrices {
        a0: a0(x2, xi1, xi2, b),
        p0,
        q0,
        x2,
        xi1,
        xi2,
        b: bv,
    })
}

/// `|A0 p_j - i tau_j p_j|` for each column `p_j` of `P0`.
pub fn polarization_residuals(m: &ModeMatrices) -> [f64; 3] {
    let taus = m.taus();
    [0, 1, 2].map(|j| {
        let col: Vector3<Complex64> = m.p0.column(j).into_owned();
        (m.a0 * col - col * c(0.0, taus[j])).norm()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::make_betaplane;
    use nalgebra::linalg::SymmetricEigen;

    fn beta() -> CoriolisProfile {
        make_betaplane(1.0).unwrap()
    }

    #[test]
    fn a0_spectrum_at_the_equator() {
        let a = a0(0.0, 1.0, 0.0, &beta());
        assert_eq!(a.trace(), c(0.0, 0.0));
        // -i A0 is Hermitian with eigenvalues tau
        let h = a * c(0.0, -1.0);
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (e, t) in ev.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((e - t).abs() < 1e-14);
        }
    }

    #[test]
    fn poincare_symbol_examples() {
        let b = beta();
        assert_eq!(poincare_symbol(Branch::Plus, 0.0, 1.0, 0.0, &b), 1.0);
        assert_eq!(poincare_symbol(Branch::Minus, 0.0, 3.0, 4.0, &b), -5.0);
        let p = poincare_symbol(Branch::Plus, 0.7, 1.2, -0.4, &b);
        let m = poincare_symbol(Branch::Minus, 0.7, 1.2, -0.4, &b);
        assert!((p * m + (1.44 + 0.16 + 0.49)).abs() < 1e-14);
    }

    #[test]
    fn columns_at_the_equator() {
        let m = polarization_matrices(0.0, 1.0, 0.0, &beta()).unwrap();
        let expect = [[-1.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]];
        for (j, col) in expect.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                assert!((m.p0[(i, j)] - c(*v, 0.0)).norm() < 1e-15);
            }
        }
        assert!((m.det_p0().norm() - 2.0).abs() < 1e-14);
        assert_eq!(m.det_formula(), 2.0);
        assert!(polarization_residuals(&m).iter().all(|r| *r < 1e-14));
        assert!(m.identity_defect() < 1e-15);
    }

    #[test]
    fn closed_form_inverse_matches_numeric_inverse() {
        let m = polarization_matrices(0.4, -0.7, 1.3, &beta()).unwrap();
        let inv = m.p0.try_inverse().unwrap();
        let diff = (inv - m.q0).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-13, "{diff}");
    }

    #[test]
    fn residuals_are_scale_invariant() {
        let mut m = polarization_matrices(-0.3, 2.0, 0.5, &beta()).unwrap();
        let r = polarization_residuals(&m);
        m.p0.column_mut(1).scale_mut(2.0);
        let r2 = polarization_residuals(&m);
        assert!(r[1] < 1e-14 && r2[1] < 2e-14);
    }

    #[test]
    fn rejects_zero_xi1() {
        assert!(polarization_matrices(0.0, 0.0, 1.0, &beta()).is_err());
    }
}
