//! Poincare-wave spectra: the action of `xi2^2 + b^2(x2)`, leading-order
//! Bohr-Sommerfeld eigenvalues, the betaplane dispersion cubic, and the
//! group speed that lets Poincare packets escape compact sets.

use crate::error::{Error, Result};
use crate::numeric::{self, bisect, linspace, QuadTolerance, SineNode};
use crate::profiles::{zeros_in, CoriolisProfile};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Bottom of the well `b^2`: location and value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellBottom {
    pub x: f64,
    pub value: f64,
}

const WELL_REACH: f64 = 50.0;
const WELL_GRID: usize = 20_000;

fn b_sq(b: &CoriolisProfile, x: f64) -> f64 {
    let v = b.value(x);
    v * v
}

/// Global minimum of `b^2` on a window of `±50` length scales, refined by
/// golden-section search.
pub fn well_bottom(b: &CoriolisProfile) -> WellBottom {
    let reach = WELL_REACH * b.length_scale();
    let xs = linspace(-reach, reach, WELL_GRID + 1);
    let (i, _) = xs
        .iter()
        .map(|&x| b_sq(b, x))
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let (mut lo, mut hi) = (xs[i.saturating_sub(1)], xs[(i + 1).min(WELL_GRID)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        if hi - lo <= 1e-15 * reach {
            break;
        }
        let c = hi - g * (hi - lo);
        let d = lo + g * (hi - lo);
        if b_sq(b, c) <= b_sq(b, d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    let x = 0.5 * (lo + hi);
    let grid_best = b_sq(b, xs[i]);
    let refined = b_sq(b, x);
    if refined <= grid_best {
        WellBottom { x, value: refined }
    } else {
        WellBottom {
            x: xs[i],
            value: grid_best,
        }
    }
}

/// The two solutions of `b^2(x2) = h`.
pub fn turning_points(h: f64, b: &CoriolisProfile) -> Result<(f64, f64)> {
    let bottom = well_bottom(b);
    if !(h > bottom.value) {
        return Err(Error::BelowWell {
            h,
            min: bottom.value,
        });
    }
    let f = |x: f64| b_sq(b, x) - h;
    let scale = b.length_scale();
    let limit = 1e6 * scale;
    let reach = |dir: f64| -> Result<f64> {
        let mut step = WELL_REACH * scale;
        loop {
            let x = bottom.x + dir * step;
            if f(x) > 0.0 {
                return Ok(x);
            }
            if step > limit {
                return Err(Error::InvalidArgument(format!(
                    "b^2 stays below {h} within {limit} of the well bottom"
                )));
            }
            step *= 2.0;
        }
    };
    let (lo, hi) = (reach(-1.0)?, reach(1.0)?);
    let roots = zeros_in(f, lo, hi, 1e-15 * scale.max(1.0));
    match roots.len() {
        2 => Ok((roots[0], roots[1])),
        count if count > 2 => Err(Error::MultiWell { h, count }),
        _ => {
            // the grid can miss crossings within one cell of the ends
            let a = bisect(f, lo, bottom.x, 1e-15 * scale.max(1.0));
            let c = bisect(f, bottom.x, hi, 1e-15 * scale.max(1.0));
            Ok((a, c))
        }
    }
}

/// `I(h) = 2 int sqrt(h - b^2) dx2` between the turning points.
pub fn action_integral(h: f64, b: &CoriolisProfile, tol: QuadTolerance) -> Result<f64> {
    let (lo, hi) = turning_points(h, b)?;
    let half = numeric::integrate_sine_substituted(
        lo,
        hi,
        |n: SineNode| (h - b_sq(b, n.y)).max(0.0).sqrt() * n.jacobian,
        tol,
    )?;
    Ok(2.0 * half)
}

/// `dI/dh = int (h - b^2)^{-1/2} dx2`.
pub fn action_derivative(h: f64, b: &CoriolisProfile, tol: QuadTolerance) -> Result<f64> {
    let (lo, hi) = turning_points(h, b)?;
    let slope = |x: f64| 2.0 * (b.value(x) * b.d1(x)).abs();
    let (s_lo, s_hi) = (slope(lo), slope(hi));
    numeric::integrate_sine_substituted(
        lo,
        hi,
        |n: SineNode| {
            let r = h - b_sq(b, n.y);
            let cos = n.jacobian / n.half_width;
            if r > 0.0 && cos > 1e-6 {
                n.jacobian / r.sqrt()
            } else {
                let s = if n.upper { s_hi } else { s_lo };
                (2.0 * n.half_width / s).sqrt()
            }
        },
        tol,
    )
}

/// Leading-order eigenvalue `lambda_n`: the root of
/// `I(lambda) = 2 pi eps (n + 1/2)`.
pub fn bohr_sommerfeld(n: u32, eps: f64, b: &CoriolisProfile, tol: QuadTolerance) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let target = 2.0 * PI * eps * (n as f64 + 0.5);
    let bottom = well_bottom(b).value;
    let residual = |h: f64| action_integral(h, b, tol).map(|i| i - target);
    let mut lo = bottom;
    let mut width = target.max(1e-300);
    let mut hi = bottom + width;
    while residual(hi)? < 0.0 {
        lo = hi;
        width *= 2.0;
        hi = bottom + width;
        if !hi.is_finite() {
            return Err(Error::NoRoot("action never reaches the target".into()));
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let r = residual(x)?;
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = action_derivative(x, b, tol)?;
        let newton = x - r / d;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-14 * x.abs().max(1e-300) || hi - lo <= 1e-15 * hi.abs() {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// All `lambda_n < e_max`, in increasing `n`.
pub fn eigenvalues_below(
    e_max: f64,
    eps: f64,
    b: &CoriolisProfile,
    tol: QuadTolerance,
) -> Result<Vec<f64>> {
    let bottom = well_bottom(b).value;
    if !(e_max > bottom) {
        return Ok(Vec::new());
    }
    let count_f = action_integral(e_max, b, tol)? / (2.0 * PI * eps) + 0.5;
    let count = count_f.floor().max(0.0) as u32;
    let mut out = Vec::with_capacity(count as usize);
    for n in 0..count {
        let l = bohr_sommerfeld(n, eps, b, tol)?;
        if l < e_max {
            out.push(l);
        }
    }
    Ok(out)
}

/// The three real roots of `tau^3 - (xi1^2 + beta eps (2n+1)) tau + eps beta xi1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionTriple {
    pub tau_minus: f64,
    pub tau_r: f64,
    pub tau_plus: f64,
    pub xi1: f64,
    pub n: u32,
    pub eps: f64,
    pub beta: f64,
}

impl DispersionTriple {
    fn coefficients(&self) -> (f64, f64) {
        dispersion_coefficients(self.xi1, self.n, self.eps, self.beta)
    }

    pub fn roots(&self) -> [f64; 3] {
        [self.tau_minus, self.tau_r, self.tau_plus]
    }

    /// Cubic evaluated at each root.
    pub fn residuals(&self) -> [f64; 3] {
        let (p, q) = self.coefficients();
        self.roots().map(|t| t * t * t + p * t + q)
    }

    /// `(sum of roots, product of roots + eps beta xi1)`: both vanish.
    pub fn vieta_defects(&self) -> (f64, f64) {
        let (_, q) = self.coefficients();
        (
            self.tau_minus + self.tau_r + self.tau_plus,
            self.tau_minus * self.tau_r * self.tau_plus + q,
        )
    }
}

fn dispersion_coefficients(xi1: f64, n: u32, eps: f64, beta: f64) -> (f64, f64) {
    (
        -(xi1 * xi1 + beta * eps * (2.0 * n as f64 + 1.0)),
        eps * beta * xi1,
    )
}

pub fn dispersion_roots(xi1: f64, n: u32, eps: f64, beta: f64) -> Result<DispersionTriple> {
    if xi1 == 0.0 || !(eps > 0.0) || beta == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "need xi1 != 0, eps > 0, beta != 0; got {xi1}, {eps}, {beta}"
        )));
    }
    let (p, q) = dispersion_coefficients(xi1, n, eps, beta);
    let discriminant = -(4.0 * p * p * p + 27.0 * q * q);
    if !(discriminant > 0.0) {
        return Err(Error::ComplexRoots { discriminant });
    }
    let m = 2.0 * (-p / 3.0).sqrt();
    let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
    let phi = arg.acos() / 3.0;
    let polish = |t: f64| {
        let f = t * t * t + p * t + q;
        let d = 3.0 * t * t + p;
        if d != 0.0 {
            t - f / d
        } else {
            t
        }
    };
    let mut roots = [0, 1, 2].map(|k| polish(m * (phi - 2.0 * PI * k as f64 / 3.0).cos()));
    roots.sort_by(f64::total_cmp);
    Ok(DispersionTriple {
        tau_minus: roots[0],
        tau_r: roots[1],
        tau_plus: roots[2],
        xi1,
        n,
        eps,
        beta,
    })
}

/// Relative gap between the Rossby root and `eps beta xi1 / (xi1^2 + beta eps (2n+1))`.
pub fn rossby_root_asymptotics(xi1: f64, n: u32, eps: f64, beta: f64) -> Result<f64> {
    let t = dispersion_roots(xi1, n, eps, beta)?;
    let approx = eps * beta * xi1 / (xi1 * xi1 + beta * eps * (2.0 * n as f64 + 1.0));
    Ok((t.tau_r - approx).abs() / t.tau_r.abs())
}

/// `|2 xi1 + dlambda/dxi1| / (2 sqrt(lambda + xi1^2))`.
pub fn group_speed(xi1: f64, lambda: f64, dlambda_dxi1: f64) -> Result<f64> {
    let s = lambda + xi1 * xi1;
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda + xi1^2 must be positive, got {s}"
        )));
    }
    Ok((2.0 * xi1 + dlambda_dxi1).abs() / (2.0 * s.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::make_betaplane;

    fn tol() -> QuadTolerance {
        QuadTolerance::rel(1e-12)
    }

    #[test]
    fn harmonic_action_is_ellipse_area() {
        let b = make_betaplane(1.0).unwrap();
        assert!((action_integral(1.0, &b, tol()).unwrap() - PI).abs() < 1e-12);
        let b2 = make_betaplane(2.0).unwrap();
        assert!((action_integral(3.0, &b2, tol()).unwrap() - 1.5 * PI).abs() < 1e-12);
        assert!((action_derivative(3.0, &b2, tol()).unwrap() - 0.5 * PI).abs() < 1e-9);
        assert!(action_integral(1e-10, &b, tol()).unwrap() < 1e-9);
    }

    #[test]
    fn quartic_action_scales_by_eight() {
        let b = CoriolisProfile::Quadratic {
            curvature: 1.0,
            offset: 0.0,
        };
        let i1 = action_integral(0.5, &b, tol()).unwrap();
        let i16 = action_integral(8.0, &b, tol()).unwrap();
        assert!((i16 / i1 - 8.0).abs() < 1e-10);
    }

    #[test]
    fn below_and_multi_well_errors() {
        let b = make_betaplane(1.0).unwrap();
        assert!(matches!(action_integral(0.0, &b, tol()), Err(Error::BelowWell { .. })));
        let double = CoriolisProfile::Quadratic {
            curvature: 1.0,
            offset: -1.0,
        };
        assert!(matches!(
            action_integral(0.5, &double, tol()),
            Err(Error::MultiWell { count: 4, .. })
        ));
    }

    #[test]
    fn harmonic_eigenvalues() {
        let b = make_betaplane(1.0).unwrap();
        assert!((bohr_sommerfeld(0, 0.1, &b, tol()).unwrap() - 0.1).abs() < 1e-12);
        assert!((bohr_sommerfeld(3, 0.1, &b, tol()).unwrap() - 0.7).abs() < 1e-12);
        let b2 = make_betaplane(2.0).unwrap();
        assert!((bohr_sommerfeld(1, 0.05, &b2, tol()).unwrap() - 0.3).abs() < 1e-12);
        let below = eigenvalues_below(1.0, 0.1, &b, tol()).unwrap();
        assert_eq!(below.len(), 5);
    }

    #[test]
    fn cubic_roots_and_vieta() {
        let t = dispersion_roots(1.0, 0, 0.1, 1.0).unwrap();
        // bisection oracle for the middle root of tau^3 - 1.1 tau + 0.1
        let mid = bisect(|x| x * x * x - 1.1 * x + 0.1, 0.0, 0.5, 1e-15);
        assert!((t.tau_r - mid).abs() < 1e-13);
        assert!((t.tau_r - 0.0916).abs() < 1e-4);
        assert!(t.residuals().iter().all(|r| r.abs() < 1e-14));
        let (s, p) = t.vieta_defects();
        assert!(s.abs() < 1e-14 && p.abs() < 1e-14);
        let small = dispersion_roots(2.0, 1, 1e-9, 1.0).unwrap();
        assert!((small.tau_minus + 2.0).abs() < 1e-8 && (small.tau_plus - 2.0).abs() < 1e-8);
        assert!(small.tau_r.abs() < 1e-8);
    }

    #[test]
    fn rossby_root_gap_is_second_order() {
        let g = rossby_root_asymptotics(1.0, 0, 1e-3, 1.0).unwrap();
        assert!(g < 1e-5, "{g}");
        let g2 = rossby_root_asymptotics(1.0, 0, 5e-4, 1.0).unwrap();
        assert!((g / g2 - 4.0).abs() < 0.1, "{}", g / g2);
    }

    #[test]
    fn group_speed_examples() {
        assert!((group_speed(1.0, 0.1, 0.0).unwrap() - 1.0 / 1.1f64.sqrt()).abs() < 1e-15);
        assert_eq!(group_speed(1.5, 0.3, -3.0).unwrap(), 0.0);
        assert!(group_speed(0.1, -0.5, 0.0).is_err());
    }
}
