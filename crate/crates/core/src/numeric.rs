//! Small numerical kernels shared by the physics modules: bracketing root
//! refinement, adaptive Gauss-Kronrod quadrature with an endpoint
//! substitution for inverse-square-root singularities, and a Halton
//! sequence for deterministic low-discrepancy sampling.

use crate::error::{Error, Result};
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

/// Refines a sign change of `f` on `[a, b]` by bisection until the bracket
/// is narrower than `tol`. Returns the midpoint of the final bracket.
///
/// The caller guarantees `f(a)` and `f(b)` have opposite signs (or one is 0).
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    if f(b) == 0.0 {
        return b;
    }
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Shrinks `[inside, outside]` around the boundary of the region where
/// `valid` holds. `valid(inside)` is assumed true and `valid(outside)` false;
/// the returned pair keeps that property and has width at most `tol`.
pub fn bisect_boundary<P: Fn(f64) -> bool>(
    valid: P,
    mut inside: f64,
    mut outside: f64,
    tol: f64,
) -> (f64, f64) {
    for _ in 0..200 {
        if (outside - inside).abs() <= tol {
            break;
        }
        let m = 0.5 * (inside + outside);
        if m == inside || m == outside {
            break;
        }
        if valid(m) {
            inside = m;
        } else {
            outside = m;
        }
    }
    (inside, outside)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate, error estimate, and Kronrod estimate of `int |f|`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut absolute = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        kronrod += WGK[j] * (f1 + f2);
        absolute += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs(), (absolute * h).abs())
}

/// Error estimates below this multiple of `eps * int |f|` are rounding noise.
const ROUNDOFF_FLOOR: f64 = 1e3 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for QuadTolerance {
    fn default() -> Self {
        Self {
            rel: 1e-9,
            abs: 1e-14,
            max_intervals: 4000,
        }
    }
}

impl QuadTolerance {
    pub fn rel(rel: f64) -> Self {
        Self {
            rel,
            ..Self::default()
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    absolute: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive 15-point Gauss-Kronrod quadrature on `[a, b]`.
///
/// Converges when the error estimate is below `max(abs, rel |I|)`, or below
/// the rounding floor set by `int |f|` when the integral nearly cancels.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: QuadTolerance) -> Result<f64> {
    let (value, error, absolute) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value,
        error,
        absolute,
    });
    let mut total = value;
    let mut total_err = error;
    let mut total_abs = absolute;
    loop {
        if !total.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integral {total}")));
        }
        let target = tol.abs.max(tol.rel * total.abs()).max(ROUNDOFF_FLOOR * total_abs);
        if total_err <= target {
            return Ok(total);
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Quadrature(format!(
                "estimated error {total_err:e} after {} intervals",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // interval exhausted at machine precision; accept what we have
            return Ok(total);
        }
        let (v1, e1, a1) = gk15(&f, worst.a, mid);
        let (v2, e2, a2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        total_abs += a1 + a2 - worst.absolute;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            absolute: a1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            absolute: a2,
        });
    }
}

/// Quadrature node handed to the integrand by [`integrate_sine_substituted`].
#[derive(Debug, Clone, Copy)]
pub struct SineNode {
    /// Abscissa `y = m + w sin(theta)`.
    pub y: f64,
    /// Jacobian `w cos(theta)`.
    pub jacobian: f64,
    /// Half-width `w` of the interval.
    pub half_width: f64,
    /// True on the upper half (`theta > 0`).
    pub upper: bool,
}

/// Integrates over `[lo, hi]` after the change of variables
/// `y = m + w sin(theta)`, which cancels `(y - lo)^{-1/2}` and
/// `(hi - y)^{-1/2}` endpoint singularities. The integrand receives the node
/// and must return the already-weighted value `g(y) * jacobian`.
pub fn integrate_sine_substituted<F: Fn(SineNode) -> f64>(
    lo: f64,
    hi: f64,
    integrand: F,
    tol: QuadTolerance,
) -> Result<f64> {
    let m = 0.5 * (lo + hi);
    let w = 0.5 * (hi - lo);
    integrate(
        |theta: f64| {
            let node = SineNode {
                y: m + w * theta.sin(),
                jacobian: w * theta.cos(),
                half_width: w,
                upper: theta > 0.0,
            };
            integrand(node)
        },
        -FRAC_PI_2,
        FRAC_PI_2,
        tol,
    )
}

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Point `index` of the Halton sequence in `dim <= 8` dimensions.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    PRIMES[..dim]
        .iter()
        .map(|&p| radical_inverse(index, p))
        .collect()
}

/// `n` equally spaced points from `start` to `stop` inclusive (`n == 1`
/// yields `start`).
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn boundary_bisection_keeps_orientation() {
        let (i, o) = bisect_boundary(|x| x < 0.3, 0.0, 1.0, 1e-12);
        assert!(i < 0.3 && o >= 0.3 && o - i <= 1e-12);
    }

    #[test]
    fn gauss_kronrod_polynomial_and_oscillatory() {
        let v = integrate(|x| x.powi(5) - 3.0 * x, 0.0, 2.0, QuadTolerance::default()).unwrap();
        assert!((v - (64.0 / 6.0 - 6.0)).abs() < 1e-12);
        let v = integrate(|x| (10.0 * x).sin(), 0.0, PI, QuadTolerance::rel(1e-12)).unwrap();
        assert!((v - (1.0 - (10.0 * PI).cos()) / 10.0).abs() < 1e-12);
    }

    #[test]
    fn sine_substitution_removes_endpoint_singularity() {
        // int_{-a}^{a} (a^2 - y^2)^{-1/2} dy = pi
        let a = 1.3;
        let v = integrate_sine_substituted(
            -a,
            a,
            |n| n.jacobian / (a * a - n.y * n.y).max(1e-300).sqrt(),
            QuadTolerance::rel(1e-12),
        )
        .unwrap();
        assert!((v - PI).abs() < 1e-10, "{v}");
    }

    #[test]
    fn halton_first_points() {
        assert_eq!(halton(1, 2), vec![0.5, 1.0 / 3.0]);
        assert_eq!(halton(2, 2), vec![0.25, 2.0 / 3.0]);
        assert_eq!(radical_inverse(0, 5), 0.0);
    }

    #[test]
    fn linspace_endpoints_exact() {
        let v = linspace(0.5, 2.0, 7);
        assert_eq!(v.len(), 7);
        assert_eq!(v[0], 0.5);
        assert_eq!(v[6], 2.0);
        assert_eq!(v[2], 1.0);
    }
}
