//! Background fields: the zonal current `u1(x2)` and the Coriolis parameter
//! `b(x2)`, each with closed-form first and second derivatives.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Value and first two derivatives of a scalar profile at one latitude.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Standard bump `exp(1 - 1/(1 - s^2))` and its derivatives in `s`,
/// identically zero for `|s| >= 1`.
fn unit_bump(s: f64) -> Jet {
    if s.abs() >= 1.0 {
        return Jet::default();
    }
    let q = 1.0 - s * s;
    let f = (1.0 - 1.0 / q).exp();
    let g1 = -2.0 * s / (q * q);
    let g2 = -(2.0 + 6.0 * s * s) / (q * q * q);
    Jet {
        value: f,
        d1: f * g1,
        d2: f * (g1 * g1 + g2),
    }
}

/// Zonal current profile `u1(x2)`, compactly supported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ZonalProfile {
    /// No convection.
    Zero,
    /// `amplitude * exp(1 - 1/(1 - s^2))`, `s = (y - center)/halfwidth`.
    Bump {
        center: f64,
        halfwidth: f64,
        amplitude: f64,
    },
    /// `scale * y * bump(y; 0, halfwidth, 1)`: negative on `(-halfwidth, 0)`
    /// for positive scale, with a simple zero at the origin.
    SignedZonal { scale: f64, halfwidth: f64 },
}

pub fn make_bump(center: f64, halfwidth: f64, amplitude: f64) -> Result<ZonalProfile> {
    let p = ZonalProfile::Bump {
        center,
        halfwidth,
        amplitude,
    };
    p.validate()?;
    Ok(p)
}

pub fn make_signed_zonal(scale: f64, halfwidth: f64) -> Result<ZonalProfile> {
    let p = ZonalProfile::SignedZonal { scale, halfwidth };
    p.validate()?;
    Ok(p)
}

impl ZonalProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ZonalProfile::Zero => Ok(()),
            ZonalProfile::Bump {
                center,
                halfwidth,
                amplitude,
            } => {
                if !(halfwidth > 0.0 && halfwidth.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "bump halfwidth must be positive, got {halfwidth}"
                    )));
                }
                if !center.is_finite() || !amplitude.is_finite() {
                    return Err(Error::InvalidArgument("non-finite bump parameter".into()));
                }
                Ok(())
            }
            ZonalProfile::SignedZonal { scale, halfwidth } => {
                if !(halfwidth > 0.0 && halfwidth.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "signed zonal halfwidth must be positive, got {halfwidth}"
                    )));
                }
                if scale == 0.0 || !scale.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "signed zonal scale must be nonzero, got {scale}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn jet(&self, y: f64) -> Jet {
        match *self {
            ZonalProfile::Zero => Jet::default(),
            ZonalProfile::Bump {
                center,
                halfwidth,
                amplitude,
            } => {
                let j = unit_bump((y - center) / halfwidth);
                Jet {
                    value: amplitude * j.value,
                    d1: amplitude * j.d1 / halfwidth,
                    d2: amplitude * j.d2 / (halfwidth * halfwidth),
                }
            }
            ZonalProfile::SignedZonal { scale, halfwidth } => {
                let j = unit_bump(y / halfwidth);
                let phi = j.value;
                let phi1 = j.d1 / halfwidth;
                let phi2 = j.d2 / (halfwidth * halfwidth);
                Jet {
                    value: scale * y * phi,
                    d1: scale * (phi + y * phi1),
                    d2: scale * (2.0 * phi1 + y * phi2),
                }
            }
        }
    }

    #[inline]
    pub fn value(&self, y: f64) -> f64 {
        self.jet(y).value
    }

    #[inline]
    pub fn d1(&self, y: f64) -> f64 {
        self.jet(y).d1
    }

    #[inline]
    pub fn d2(&self, y: f64) -> f64 {
        self.jet(y).d2
    }

    /// `u1(y0) - u1(y)`, evaluated without cancellation for the bump when
    /// both points lie inside the support.
    pub fn drop(&self, y0: f64, y: f64) -> f64 {
        if let ZonalProfile::Bump {
            center,
            halfwidth,
            amplitude,
        } = *self
        {
            let s0 = (y0 - center) / halfwidth;
            let s = (y - center) / halfwidth;
            if s0.abs() < 1.0 && s.abs() < 1.0 {
                // exponent difference 1/(1 - s0^2) - 1/(1 - s^2)
                let e = (s0 * s0 - s * s) / ((1.0 - s0 * s0) * (1.0 - s * s));
                return -amplitude * unit_bump(s0).value * e.exp_m1();
            }
        }
        self.value(y0) - self.value(y)
    }

    /// Closed support `[s_lo, s_hi]`; `None` for the zero profile.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            ZonalProfile::Zero => None,
            ZonalProfile::Bump {
                center, halfwidth, ..
            } => Some((center - halfwidth, center + halfwidth)),
            ZonalProfile::SignedZonal { halfwidth, .. } => Some((-halfwidth, halfwidth)),
        }
    }

    pub fn length_scale(&self) -> Option<f64> {
        match *self {
            ZonalProfile::Zero => None,
            ZonalProfile::Bump { halfwidth, .. } | ZonalProfile::SignedZonal { halfwidth, .. } => {
                Some(halfwidth)
            }
        }
    }

    pub fn description(&self) -> String {
        match *self {
            ZonalProfile::Zero => "u1 = 0".to_string(),
            ZonalProfile::Bump {
                center,
                halfwidth,
                amplitude,
            } => format!("bump(center={center}, halfwidth={halfwidth}, amplitude={amplitude})"),
            ZonalProfile::SignedZonal { scale, halfwidth } => {
                format!("signed zonal(scale={scale}, halfwidth={halfwidth})")
            }
        }
    }
}

/// Coriolis parameter `b(x2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoriolisProfile {
    /// `b = beta * x2`.
    Betaplane { beta: f64 },
    /// `b = curvature * x2^2 + offset`.
    Quadratic { curvature: f64, offset: f64 },
}

pub fn make_betaplane(beta: f64) -> Result<CoriolisProfile> {
    let p = CoriolisProfile::Betaplane { beta };
    p.validate()?;
    Ok(p)
}

impl CoriolisProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CoriolisProfile::Betaplane { beta } => {
                if beta == 0.0 || !beta.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "betaplane slope must be nonzero, got {beta}"
                    )));
                }
            }
            CoriolisProfile::Quadratic { curvature, offset } => {
                if curvature == 0.0 || !curvature.is_finite() || !offset.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "quadratic Coriolis needs nonzero finite curvature, got {curvature}"
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn jet(&self, y: f64) -> Jet {
        match *self {
            CoriolisProfile::Betaplane { beta } => Jet {
                value: beta * y,
                d1: beta,
                d2: 0.0,
            },
            CoriolisProfile::Quadratic { curvature, offset } => Jet {
                value: curvature * y * y + offset,
                d1: 2.0 * curvature * y,
                d2: 2.0 * curvature,
            },
        }
    }

    #[inline]
    pub fn value(&self, y: f64) -> f64 {
        self.jet(y).value
    }

    #[inline]
    pub fn d1(&self, y: f64) -> f64 {
        self.jet(y).d1
    }

    #[inline]
    pub fn d2(&self, y: f64) -> f64 {
        self.jet(y).d2
    }

    pub fn betaplane_slope(&self) -> Option<f64> {
        match *self {
            CoriolisProfile::Betaplane { beta } => Some(beta),
            _ => None,
        }
    }

    /// Zeros of `b'`.
    pub fn critical_points(&self) -> Vec<f64> {
        match *self {
            CoriolisProfile::Betaplane { .. } => Vec::new(),
            CoriolisProfile::Quadratic { .. } => vec![0.0],
        }
    }

    pub fn length_scale(&self) -> f64 {
        match *self {
            CoriolisProfile::Betaplane { beta } => 1.0 / beta.abs(),
            CoriolisProfile::Quadratic { curvature, .. } => 1.0 / curvature.abs().sqrt(),
        }
    }

    /// Numerical surrogate for `b^2 -> infinity`: `b^2(+-X) > b^2(0) + 1` at
    /// `X = 100` length scales.
    pub fn grows_at_infinity(&self) -> bool {
        let x = 100.0 * self.length_scale();
        let b0 = self.value(0.0).powi(2);
        self.value(x).powi(2) > b0 + 1.0 && self.value(-x).powi(2) > b0 + 1.0
    }

    pub fn description(&self) -> String {
        match *self {
            CoriolisProfile::Betaplane { beta } => format!("betaplane(beta={beta})"),
            CoriolisProfile::Quadratic { curvature, offset } => {
                format!("quadratic(curvature={curvature}, offset={offset})")
            }
        }
    }
}

/// The pair of background fields every dynamical computation needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profiles {
    pub zonal: ZonalProfile,
    pub coriolis: CoriolisProfile,
}

impl Profiles {
    pub fn new(zonal: ZonalProfile, coriolis: CoriolisProfile) -> Self {
        Self { zonal, coriolis }
    }

    pub fn betaplane(beta: f64) -> Result<Self> {
        Ok(Self::new(ZonalProfile::Zero, make_betaplane(beta)?))
    }

    pub fn validate(&self) -> Result<()> {
        self.zonal.validate()?;
        self.coriolis.validate()
    }

    /// Smallest characteristic length of the two fields.
    pub fn length_scale(&self) -> f64 {
        let c = self.coriolis.length_scale();
        match self.zonal.length_scale() {
            Some(z) => z.min(c),
            None => c,
        }
    }
}

/// Supremum over a sample grid of `|b^(k)| / (1 + b^2)` for `k = 0..=orders`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolReport {
    pub max_ratio: Vec<f64>,
}

pub fn check_symbol_condition(
    profile: &CoriolisProfile,
    orders: usize,
    grid: &[f64],
) -> Result<SymbolReport> {
    if orders > 2 {
        return Err(Error::InvalidArgument(format!(
            "symbol check supports orders <= 2, got {orders}"
        )));
    }
    let mut max_ratio = vec![0.0f64; orders + 1];
    for &y in grid {
        let j = profile.jet(y);
        let denom = 1.0 + j.value * j.value;
        for (k, slot) in max_ratio.iter_mut().enumerate() {
            let d = match k {
                0 => j.value,
                1 => j.d1,
                _ => j.d2,
            };
            *slot = slot.max(d.abs() / denom);
        }
    }
    Ok(SymbolReport { max_ratio })
}

pub const DEFAULT_ZERO_CELLS: usize = 10_000;

/// Roots of `f` on `[lo, hi]` found by a sign-change scan over
/// [`DEFAULT_ZERO_CELLS`] cells and bisection to width `tol`.
///
/// Tangential zeros (no sign change) are not reported. A grid node where `f`
/// is exactly zero counts only if its neighbours have strictly opposite signs.
pub fn zeros_in<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
    zeros_in_cells(f, lo, hi, tol, DEFAULT_ZERO_CELLS)
}

pub fn zeros_in_cells<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    cells: usize,
) -> Vec<f64> {
    if !(hi > lo) || cells == 0 {
        return Vec::new();
    }
    let xs: Vec<f64> = crate::numeric::linspace(lo, hi, cells + 1);
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots: Vec<f64> = Vec::new();
    let push = |r: f64, roots: &mut Vec<f64>| {
        if roots.last().is_none_or(|&last| (r - last).abs() > tol) {
            roots.push(r);
        }
    };
    for i in 0..cells {
        let (fa, fb) = (fs[i], fs[i + 1]);
        if fa * fb < 0.0 {
            let r = crate::numeric::bisect(&f, xs[i], xs[i + 1], tol);
            push(r, &mut roots);
        } else if fb == 0.0 && fa != 0.0 && i + 2 <= cells {
            let fc = fs[i + 2];
            if fa * fc < 0.0 {
                push(xs[i + 1], &mut roots);
            }
        }
    }
    roots
}
