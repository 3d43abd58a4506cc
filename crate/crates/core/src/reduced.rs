//! The reduced `(x2, xi2)` problem at fixed `(tau, xi1)`.
//!
//! On the energy surface `xi2^2 = V(x2)` with the effective potential
//!
//! ```text
//! V(x2) = b'(x2) xi1 / (tau - u1(x2) xi1) - xi1^2 - b(x2)^2
//! ```
//!
//! The motion in `x2` lives in the band around the start latitude where `V`
//! is nonnegative and regular. Its endpoints are turning points (simple
//! zeros), degenerate zeros, or poles where `tau = u1(x2) xi1`.

use crate::error::{Error, Result};
use crate::numeric::{self, QuadTolerance, SineNode};
use crate::profiles::Profiles;
use serde::{Deserialize, Serialize};

/// Effective potential bound to one energy level and frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential<'a> {
    pub tau: f64,
    pub xi1: f64,
    pub profiles: &'a Profiles,
}

impl<'a> Potential<'a> {
    pub fn new(tau: f64, xi1: f64, profiles: &'a Profiles) -> Self {
        Self { tau, xi1, profiles }
    }

    /// `tau - u1(x2) xi1`.
    #[inline]
    pub fn denominator(&self, x2: f64) -> f64 {
        self.tau - self.profiles.zonal.value(x2) * self.xi1
    }

    fn is_singular(&self, x2: f64) -> bool {
        let u = self.profiles.zonal.value(x2) * self.xi1;
        let den = self.tau - u;
        den == 0.0 || den.abs() <= 1e-14 * (self.tau.abs() + u.abs())
    }

    /// Formula value with no singularity check (may be infinite).
    #[inline]
    pub fn value_unchecked(&self, x2: f64) -> f64 {
        let b = self.profiles.coriolis.jet(x2);
        b.d1 * self.xi1 / self.denominator(x2) - self.xi1 * self.xi1 - b.value * b.value
    }

    pub fn value(&self, x2: f64) -> Result<f64> {
        if self.is_singular(x2) {
            return Err(Error::SingularDenominator { x2 });
        }
        Ok(self.value_unchecked(x2))
    }

    #[inline]
    pub fn derivative_unchecked(&self, x2: f64) -> f64 {
        let b = self.profiles.coriolis.jet(x2);
        let u = self.profiles.zonal.jet(x2);
        let den = self.tau - u.value * self.xi1;
        b.d2 * self.xi1 / den + b.d1 * self.xi1 * self.xi1 * u.d1 / (den * den)
            - 2.0 * b.value * b.d1
    }

    pub fn derivative(&self, x2: f64) -> Result<f64> {
        if self.is_singular(x2) {
            return Err(Error::SingularDenominator { x2 });
        }
        Ok(self.derivative_unchecked(x2))
    }
}

/// `V_{tau, xi1}(x2)`; errors at singular latitudes.
pub fn potential(tau: f64, xi1: f64, x2: f64, profiles: &Profiles) -> Result<f64> {
    Potential::new(tau, xi1, profiles).value(x2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub x2: f64,
    pub xi2_plus: f64,
    pub xi2_minus: f64,
    pub v: f64,
}

/// Both branches `(x2, +-sqrt(V))` of the energy surface over the grid
/// points where `V >= 0`; forbidden and singular points are skipped.
pub fn energy_surface_points(
    tau: f64,
    xi1: f64,
    grid: &[f64],
    profiles: &Profiles,
) -> Vec<SurfacePoint> {
    let pot = Potential::new(tau, xi1, profiles);
    grid.iter()
        .filter_map(|&x2| {
            let v = pot.value(x2).ok()?;
            (v >= 0.0 && v.is_finite()).then(|| {
                let r = v.sqrt();
                SurfacePoint {
                    x2,
                    xi2_plus: r,
                    xi2_minus: -r,
                    v,
                }
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    /// `V = 0` with `V' != 0`: a turning point reached in finite time.
    SimpleZero,
    /// `V = 0` with `V' = 0`: a fixed point of the reduced motion.
    DegenerateZero,
    /// `tau = u1 xi1` with `u1' != 0` and `b' != 0`.
    SimplePole,
    /// Pole of order above one, or a pole where `b'` vanishes.
    HigherPoleOrBPrimeZero,
}

impl EndpointKind {
    pub fn is_pole(&self) -> bool {
        matches!(self, EndpointKind::SimplePole | EndpointKind::HigherPoleOrBPrimeZero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketOptions {
    /// Outward march step; `None` means `1e-3` times the profile length scale.
    pub step: Option<f64>,
    /// Endpoint bisection width.
    pub tol: f64,
    /// `|V'|` (resp. `|u1'|`, `|b'|`) at or below this is treated as zero.
    pub tol_deg: f64,
    /// Halve the march step until the bracket is stable twice in a row.
    pub refine: bool,
    pub max_march_steps: usize,
}

impl Default for BracketOptions {
    fn default() -> Self {
        Self {
            step: None,
            tol: 1e-12,
            tol_deg: 1e-8,
            refine: true,
            max_march_steps: 20_000_000,
        }
    }
}

/// The band `[xmin, xmax]` of the reduced motion through `x2_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialReport {
    pub tau: f64,
    pub xi1: f64,
    pub x2_0: f64,
    pub xmin: f64,
    pub xmax: f64,
    pub lower: EndpointKind,
    pub upper: EndpointKind,
    pub profiles: Profiles,
}

impl PotentialReport {
    pub fn potential(&self) -> Potential<'_> {
        Potential::new(self.tau, self.xi1, &self.profiles)
    }

    pub fn is_periodic(&self) -> bool {
        self.lower == EndpointKind::SimpleZero && self.upper == EndpointKind::SimpleZero
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    x: f64,
    kind: EndpointKind,
}

fn march(
    pot: &Potential<'_>,
    x0: f64,
    dir: f64,
    step: f64,
    opts: &BracketOptions,
) -> Result<Edge> {
    let den0 = pot.denominator(x0).signum();
    let valid = |x: f64| {
        let den = pot.denominator(x);
        den.signum() == den0 && den != 0.0 && pot.value_unchecked(x) >= 0.0
    };
    let mut inside = x0;
    let mut n = 0usize;
    let outside = loop {
        n += 1;
        if n > opts.max_march_steps {
            return Err(Error::InvalidArgument(format!(
                "bracket march from {x0} did not terminate"
            )));
        }
        let x = x0 + dir * step * n as f64;
        if !valid(x) {
            break x;
        }
        inside = x;
    };
    let tol = opts.tol * x0.abs().max(1.0);
    let (a, b) = numeric::bisect_boundary(valid, inside, outside, tol);
    let x = 0.5 * (a + b);
    let den_b = pot.denominator(b);
    let kind = if den_b == 0.0 || den_b.signum() != den0 {
        let u1 = pot.profiles.zonal.d1(x);
        let b1 = pot.profiles.coriolis.d1(x);
        if u1.abs() > opts.tol_deg && b1.abs() > opts.tol_deg {
            EndpointKind::SimplePole
        } else {
            EndpointKind::HigherPoleOrBPrimeZero
        }
    } else if pot.derivative_unchecked(x).abs() > opts.tol_deg {
        EndpointKind::SimpleZero
    } else {
        EndpointKind::DegenerateZero
    };
    Ok(Edge { x, kind })
}

/// Locates the band containing `x2_0` by marching outward and refining each
/// endpoint by bisection.
pub fn bracket(
    tau: f64,
    xi1: f64,
    x2_0: f64,
    profiles: &Profiles,
    opts: &BracketOptions,
) -> Result<PotentialReport> {
    if xi1 == 0.0 {
        return Err(Error::InvalidArgument("bracket requires xi1 != 0".into()));
    }
    let pot = Potential::new(tau, xi1, profiles);
    let v0 = pot.value(x2_0)?;
    if v0 < -1e-12 {
        return Err(Error::ForbiddenRegion { x2: x2_0, value: v0 });
    }
    let base = opts.step.unwrap_or(1e-3 * profiles.length_scale());
    if !(base > 0.0) {
        return Err(Error::InvalidArgument(format!("march step must be positive, got {base}")));
    }
    let run = |h: f64| -> Result<(Edge, Edge)> {
        Ok((march(&pot, x2_0, -1.0, h, opts)?, march(&pot, x2_0, 1.0, h, opts)?))
    };
    let (mut lo, mut hi) = run(base)?;
    if opts.refine {
        let mut h = base;
        let mut stable = 0;
        let same = |a: &Edge, b: &Edge| {
            a.kind == b.kind && (a.x - b.x).abs() <= 1e3 * opts.tol * a.x.abs().max(1.0)
        };
        for _ in 0..12 {
            h *= 0.5;
            let (l2, h2) = run(h)?;
            if same(&lo, &l2) && same(&hi, &h2) {
                stable += 1;
            } else {
                stable = 0;
            }
            lo = l2;
            hi = h2;
            if stable >= 2 {
                break;
            }
        }
    }
    Ok(PotentialReport {
        tau,
        xi1,
        x2_0,
        xmin: lo.x.min(x2_0),
        xmax: hi.x.max(x2_0),
        lower: lo.kind,
        upper: hi.kind,
        profiles: *profiles,
    })
}

/// `int_{xmin}^{xmax} g(y) V(y)^{-1/2} dy` over a periodic bracket, using the
/// `sin` substitution at both turning points.
pub(crate) fn turning_point_integral<G: Fn(f64) -> f64>(
    report: &PotentialReport,
    g: G,
    tol: QuadTolerance,
) -> Result<f64> {
    if !report.is_periodic() {
        return Err(Error::NotPeriodic(format!(
            "endpoints are {:?} and {:?}",
            report.lower, report.upper
        )));
    }
    let pot = report.potential();
    let lo = polish_zero(&pot, report.xmin);
    let hi = polish_zero(&pot, report.xmax);
    let dv_lo = pot.derivative_unchecked(lo).abs();
    let dv_hi = pot.derivative_unchecked(hi).abs();
    inverse_sqrt_integral(lo, hi, |y| pot.value_unchecked(y), (dv_lo, dv_hi), g, tol)
}

/// `int_lo^hi g(y) V(y)^{-1/2} dy` for `V` with simple zeros at both ends,
/// given `|V'|` there.
pub(crate) fn inverse_sqrt_integral<V: Fn(f64) -> f64, G: Fn(f64) -> f64>(
    lo: f64,
    hi: f64,
    v: V,
    (dv_lo, dv_hi): (f64, f64),
    g: G,
    tol: QuadTolerance,
) -> Result<f64> {
    numeric::integrate_sine_substituted(
        lo,
        hi,
        |n: SineNode| {
            let v = v(n.y);
            let cos = n.jacobian / n.half_width;
            let weight = if v > 0.0 && cos > ENDPOINT_COS {
                n.jacobian / v.sqrt()
            } else {
                // cos(theta)/sqrt(V) -> sqrt(2 / (w |V'|)) at the ends
                let dv = if n.upper { dv_hi } else { dv_lo };
                (2.0 * n.half_width / dv).sqrt()
            };
            g(n.y) * weight
        },
        tol,
    )
}

/// Below this `cos(theta)` the value of `V` is dominated by rounding and the
/// endpoint limit of the weight is used instead.
const ENDPOINT_COS: f64 = 1e-4;

/// A few Newton steps on `V` from a bisected turning point.
fn polish_zero(pot: &Potential<'_>, x: f64) -> f64 {
    let mut x = x;
    for _ in 0..3 {
        let dv = pot.derivative_unchecked(x);
        if dv == 0.0 {
            break;
        }
        let step = pot.value_unchecked(x) / dv;
        if !(step.abs() < 1e-9 * x.abs().max(1.0)) {
            break;
        }
        x -= step;
    }
    x
}

/// Period of the `x2` oscillation:
/// `T = int |b' xi1| / ((tau - xi1 u1)^2 sqrt(V)) dx2` over the bracket.
pub fn period(report: &PotentialReport, tol: QuadTolerance) -> Result<f64> {
    let pot = report.potential();
    let p = &report.profiles;
    turning_point_integral(
        report,
        |y| {
            let den = pot.denominator(y);
            (p.coriolis.d1(y) * report.xi1).abs() / (den * den)
        },
        tol,
    )
}

/// `rho(y) = -b'(y)/u1(y) - b(y)^2`, the `tau = 0` potential plus `xi1^2`.
pub fn rho(x2: f64, profiles: &Profiles) -> Result<f64> {
    let u = profiles.zonal.value(x2);
    if u == 0.0 {
        return Err(Error::SingularDenominator { x2 });
    }
    let b = profiles.coriolis.jet(x2);
    Ok(-b.d1 / u - b.value * b.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{make_betaplane, make_signed_zonal};
    use std::f64::consts::PI;

    fn beta1() -> Profiles {
        Profiles::betaplane(1.0).unwrap()
    }

    #[test]
    fn betaplane_potential_values() {
        let p = beta1();
        assert!((potential(0.5, 1.0, 0.0, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!(potential(0.5, 1.0, 1.0, &p).unwrap().abs() < 1e-15);
        assert!(potential(0.5, 1.0, -1.0, &p).unwrap().abs() < 1e-15);
        assert!(matches!(
            potential(0.0, 1.0, 0.3, &p),
            Err(Error::SingularDenominator { .. })
        ));
    }

    #[test]
    fn ellipse_surface() {
        let p = beta1();
        let grid = numeric::linspace(-2.0, 2.0, 401);
        let pts = energy_surface_points(0.5, 1.0, &grid, &p);
        assert!(!pts.is_empty());
        for s in &pts {
            assert!((s.xi2_plus.powi(2) + s.x2 * s.x2 - 1.0).abs() < 1e-12);
            assert_eq!(s.xi2_minus, -s.xi2_plus);
        }
        // tau/xi1 > beta/xi1^2: V < 0 everywhere
        assert!(energy_surface_points(1.5, 1.0, &grid, &p).is_empty());
        assert!(energy_surface_points(-0.5, 1.0, &grid, &p).is_empty());
    }

    #[test]
    fn betaplane_bracket_is_unit_interval() {
        let p = beta1();
        let r = bracket(0.5, 1.0, 0.0, &p, &BracketOptions::default()).unwrap();
        assert!((r.xmin + 1.0).abs() < 1e-10 && (r.xmax - 1.0).abs() < 1e-10, "{r:?}");
        assert_eq!(r.lower, EndpointKind::SimpleZero);
        assert_eq!(r.upper, EndpointKind::SimpleZero);
        let pot = r.potential();
        assert!((pot.derivative_unchecked(r.xmin) - 2.0).abs() < 1e-9);
        assert!(pot.value_unchecked(r.xmin).abs() < 1e-10);
    }

    #[test]
    fn fixed_point_bracket_degenerates() {
        let p = beta1();
        let r = bracket(1.0, 1.0, 0.0, &p, &BracketOptions::default()).unwrap();
        assert!(r.width() < 1e-10);
        assert_eq!(r.lower, EndpointKind::DegenerateZero);
        assert_eq!(r.upper, EndpointKind::DegenerateZero);
    }

    #[test]
    fn signed_zonal_bracket_ends_on_simple_pole() {
        let p = Profiles::new(make_signed_zonal(0.3, 2.0).unwrap(), make_betaplane(1.0).unwrap());
        let xi1 = -2.0;
        let x0 = -0.5;
        assert!(rho(x0, &p).unwrap() > xi1 * xi1);
        let r = bracket(0.0, xi1, x0, &p, &BracketOptions::default()).unwrap();
        assert_eq!(r.upper, EndpointKind::SimplePole);
        assert!(r.xmax.abs() < 1e-10);
    }

    #[test]
    fn forbidden_start_is_rejected() {
        let p = beta1();
        assert!(matches!(
            bracket(0.5, 1.0, 1.5, &p, &BracketOptions::default()),
            Err(Error::ForbiddenRegion { .. })
        ));
    }

    #[test]
    fn rigid_rotation_periods() {
        let p = beta1();
        for (tau, expected) in [(0.5, 4.0 * PI), (1.0 / 3.0, 9.0 * PI)] {
            let r = bracket(tau, 1.0, 0.0, &p, &BracketOptions::default()).unwrap();
            let t = period(&r, QuadTolerance::default()).unwrap();
            assert!((t - expected).abs() / expected < 1e-9, "{t} vs {expected}");
        }
    }

    #[test]
    fn period_rejects_non_periodic() {
        let p = beta1();
        let r = bracket(1.0, 1.0, 0.0, &p, &BracketOptions::default()).unwrap();
        assert!(matches!(period(&r, QuadTolerance::default()), Err(Error::NotPeriodic(_))));
    }

    #[test]
    fn rho_examples() {
        let p = Profiles::new(make_signed_zonal(0.3, 2.0).unwrap(), make_betaplane(1.0).unwrap());
        let r = rho(-1.0, &p).unwrap();
        let u = -0.3 * (1.0f64 - 1.0 / 0.75).exp();
        assert!((r - (-1.0 / u - 1.0)).abs() < 1e-12);
        assert!((r - 3.6522).abs() < 1e-3, "{r}");
        assert!(rho(-1e-6, &p).unwrap() > 1e5);
        assert!(rho(0.0, &p).is_err());
    }
}
