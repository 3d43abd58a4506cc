//! Taxonomy of reduced trajectories in the `(x2, xi2)` plane: periodic,
//! asymptotic, and the pathological fixed, stopping and singular motions,
//! plus the fit of the asymptotic rates `x2 - x2inf ~ C1 t^-2`, `xi2 ~ C2 t`.

use crate::dynamics::{energy, symbol_unchecked, PhasePoint, Trajectory};
use crate::error::{Error, Result};
use crate::numeric::QuadTolerance;
use crate::profiles::{zeros_in, Profiles};
use crate::reduced::{bracket, period, BracketOptions, EndpointKind, Potential, PotentialReport};
use serde::{Deserialize, Serialize};

/// Which end of the band an asymptotic trajectory converges to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Converges to the upper endpoint, `x2` increasing.
    FromBelow,
    /// Converges to the lower endpoint, `x2` decreasing.
    FromAbove,
}

/// The condition defining the pathological set that a point is closest to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaCondition {
    /// `tau = xi1 u1` at a critical point of `b`.
    CoriolisCritical,
    /// The energy surface passes through a fixed point of the reduced motion.
    FixedPoint,
    /// `tau = xi1 u1` at an extremum of `u1`.
    ZonalExtremum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum TrajectoryClass {
    Periodic { period: f64, xmin: f64, xmax: f64 },
    FixedPoint { x2: f64 },
    Stopping { x2_inf: f64 },
    Asymptotic { x2_inf: f64, side: Side },
    Singular { x2_inf: f64 },
    NearSigma { condition: SigmaCondition, margin: f64 },
}

impl TrajectoryClass {
    pub fn label(&self) -> &'static str {
        match self {
            TrajectoryClass::Periodic { .. } => "periodic",
            TrajectoryClass::FixedPoint { .. } => "fixed_point",
            TrajectoryClass::Stopping { .. } => "stopping",
            TrajectoryClass::Asymptotic { .. } => "asymptotic",
            TrajectoryClass::Singular { .. } => "singular",
            TrajectoryClass::NearSigma { .. } => "near_sigma",
        }
    }

    /// The period for periodic motion, the limit latitude for the
    /// asymptotic, stopping and singular classes, `None` otherwise.
    pub fn period_or_limit(&self) -> Option<f64> {
        match *self {
            TrajectoryClass::Periodic { period, .. } => Some(period),
            TrajectoryClass::FixedPoint { x2 } => Some(x2),
            TrajectoryClass::Stopping { x2_inf }
            | TrajectoryClass::Asymptotic { x2_inf, .. }
            | TrajectoryClass::Singular { x2_inf } => Some(x2_inf),
            TrajectoryClass::NearSigma { .. } => None,
        }
    }

    pub fn is_generic(&self) -> bool {
        matches!(
            self,
            TrajectoryClass::Periodic { .. } | TrajectoryClass::Asymptotic { .. }
        )
    }
}

/// Distances from the energy `tau` of a point to each of the three
/// conditions defining the pathological set. Empty conditions give `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaMargin {
    pub coriolis_critical: f64,
    pub fixed_point: f64,
    pub zonal_extremum: f64,
}

impl SigmaMargin {
    pub fn min(&self) -> f64 {
        self.coriolis_critical
            .min(self.fixed_point)
            .min(self.zonal_extremum)
    }

    pub fn closest(&self) -> SigmaCondition {
        let m = self.min();
        if self.coriolis_critical == m {
            SigmaCondition::CoriolisCritical
        } else if self.fixed_point == m {
            SigmaCondition::FixedPoint
        } else {
            SigmaCondition::ZonalExtremum
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaOptions {
    /// Fixed-point candidates are searched within this many Coriolis length
    /// scales of the start latitude and of the current's support.
    pub window: f64,
    pub root_tol: f64,
}

impl Default for SigmaOptions {
    fn default() -> Self {
        Self {
            window: 10.0,
            root_tol: 1e-13,
        }
    }
}

/// `-u1' + 2 b b'^2 / D^2 - b''/D` with `D = xi1^2 + b^2`: the reduced
/// force `xi2_dot / xi1` on the axis `xi2 = 0`. Its zeros are the latitudes
/// of the fixed points.
pub fn fixed_point_residual(xi1: f64, y: f64, profiles: &Profiles) -> f64 {
    let u = profiles.zonal.jet(y);
    let b = profiles.coriolis.jet(y);
    let d = xi1 * xi1 + b.value * b.value;
    -u.d1 + 2.0 * b.value * b.d1 * b.d1 / (d * d) - b.d2 / d
}

fn min_abs<I: Iterator<Item = f64>>(it: I) -> f64 {
    it.map(f64::abs).fold(f64::INFINITY, f64::min)
}

pub fn sigma_margin(p0: &PhasePoint, profiles: &Profiles, opts: &SigmaOptions) -> SigmaMargin {
    let xi1 = p0.xi1();
    let tau = energy(p0, profiles);
    let u1 = &profiles.zonal;

    let coriolis_critical = min_abs(
        profiles
            .coriolis
            .critical_points()
            .into_iter()
            .map(|y| tau - xi1 * u1.value(y)),
    );

    let reach = opts.window * profiles.coriolis.length_scale();
    let (mut lo, mut hi) = (p0.x2() - reach, p0.x2() + reach);
    if let Some((s_lo, s_hi)) = u1.support() {
        lo = lo.min(s_lo - reach);
        hi = hi.max(s_hi + reach);
    }
    let fixed_point = min_abs(
        zeros_in(|y| fixed_point_residual(xi1, y, profiles), lo, hi, opts.root_tol)
            .into_iter()
            .map(|y| tau - symbol_unchecked(xi1, y, 0.0, profiles)),
    );

    let zonal_extremum = match u1.support() {
        Some((s_lo, s_hi)) => min_abs(
            zeros_in(|y| u1.d1(y), s_lo, s_hi, opts.root_tol)
                .into_iter()
                .filter(|&y| y > s_lo && y < s_hi)
                .map(|y| tau - xi1 * u1.value(y)),
        ),
        None => f64::INFINITY,
    };

    SigmaMargin {
        coriolis_critical,
        fixed_point,
        zonal_extremum,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub bracket: BracketOptions,
    pub sigma: SigmaOptions,
    pub quadrature: QuadTolerance,
    /// Points whose margin falls below this are reported as `NearSigma`.
    pub tol_sigma: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            bracket: BracketOptions::default(),
            sigma: SigmaOptions::default(),
            quadrature: QuadTolerance::default(),
            tol_sigma: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub class: TrajectoryClass,
    pub tau: f64,
    pub margin: SigmaMargin,
    /// The band through the start latitude, when one could be formed.
    pub report: Option<PotentialReport>,
}

/// Direction of motion along `x2` at the start: the sign of
/// `x2_dot = -2 b' xi1 xi2 / D^2`, or of its time derivative when `xi2 = 0`.
fn x2_direction(p0: &PhasePoint, profiles: &Profiles) -> f64 {
    let b1 = profiles.coriolis.d1(p0.x2());
    let s = -(b1 * p0.xi1()).signum();
    if p0.xi2() != 0.0 {
        return s * p0.xi2().signum();
    }
    let f = crate::dynamics::rossby_vector_field(p0, profiles);
    s * f.xi2_dot.signum()
}

pub fn classify(p0: &PhasePoint, profiles: &Profiles, opts: &ClassifyOptions) -> Result<Classification> {
    let tau = energy(p0, profiles);
    let margin = sigma_margin(p0, profiles, &opts.sigma);
    let xi1 = p0.xi1();
    let x0 = p0.x2();
    let done = |class, report| {
        Ok(Classification {
            class,
            tau,
            margin,
            report,
        })
    };

    let pot = Potential::new(tau, xi1, profiles);
    if pot.value(x0).is_err() {
        if profiles.coriolis.d1(x0).abs() <= opts.bracket.tol_deg {
            return done(TrajectoryClass::FixedPoint { x2: x0 }, None);
        }
        return Err(Error::SingularDenominator { x2: x0 });
    }

    let report = bracket(tau, xi1, x0, profiles, &opts.bracket)?;
    let degenerate = report.width() <= 1e3 * opts.bracket.tol * x0.abs().max(1.0);
    if degenerate {
        return done(TrajectoryClass::FixedPoint { x2: x0 }, Some(report));
    }

    let lower_open = report.lower != EndpointKind::SimpleZero;
    let upper_open = report.upper != EndpointKind::SimpleZero;
    let terminal = match (lower_open, upper_open) {
        (false, false) => None,
        (true, false) => Some((report.xmin, report.lower, Side::FromAbove)),
        (false, true) => Some((report.xmax, report.upper, Side::FromBelow)),
        (true, true) => {
            if x2_direction(p0, profiles) >= 0.0 {
                Some((report.xmax, report.upper, Side::FromBelow))
            } else {
                Some((report.xmin, report.lower, Side::FromAbove))
            }
        }
    };

    match terminal {
        Some((x, EndpointKind::DegenerateZero, _)) => {
            return done(TrajectoryClass::Stopping { x2_inf: x }, Some(report))
        }
        Some((x, EndpointKind::HigherPoleOrBPrimeZero, _)) => {
            return done(TrajectoryClass::Singular { x2_inf: x }, Some(report))
        }
        _ => {}
    }

    if margin.min() < opts.tol_sigma {
        return done(
            TrajectoryClass::NearSigma {
                condition: margin.closest(),
                margin: margin.min(),
            },
            Some(report),
        );
    }

    let class = match terminal {
        None => TrajectoryClass::Periodic {
            period: period(&report, opts.quadrature)?,
            xmin: report.xmin,
            xmax: report.xmax,
        },
        Some((x, _, side)) => TrajectoryClass::Asymptotic { x2_inf: x, side },
    };
    done(class, Some(report))
}

/// Least-squares fit of the tail of an asymptotic trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRates {
    /// Signed coefficient in `x2 - x2inf ~ C1 t^-2`.
    pub c1: f64,
    /// Slope in `xi2 ~ C2 t`.
    pub c2: f64,
    /// Free-slope exponent of `|x2 - x2inf|` against `t`.
    pub exponent: f64,
    /// RMS residual of the log-log fit.
    pub log_residual: f64,
    /// Coefficient of determination of the linear `xi2` fit.
    pub r_squared: f64,
    pub samples: usize,
}

impl AsymptoticRates {
    /// Relative mismatch between `C2^2 |C1|` and `|b'/u1'|` at `x2inf`.
    pub fn consistency(&self, x2_inf: f64, profiles: &Profiles) -> f64 {
        let predicted = (profiles.coriolis.d1(x2_inf) / profiles.zonal.d1(x2_inf)).abs();
        (self.c2 * self.c2 * self.c1.abs() - predicted).abs() / predicted
    }
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    (slope, intercept, (sse / n).sqrt(), r2)
}

pub const MIN_TAIL_SAMPLES: usize = 16;

/// Fits the final decade `[t_end/10, t_end]` of `traj`. Requires that
/// `xi2` keeps one sign and `|x2 - x2inf|` decreases across the tail.
pub fn asymptotic_rates(traj: &Trajectory, x2_inf: f64) -> Result<AsymptoticRates> {
    let t0 = traj.first().t;
    let t_end = traj.last().t;
    if !(t_end > 0.0 && t0 <= t_end / 10.0) {
        return Err(Error::InsufficientTail(format!(
            "need t from at most {} to {t_end}, trajectory starts at {t0}",
            t_end / 10.0
        )));
    }
    let tail: Vec<_> = traj
        .samples
        .iter()
        .filter(|s| s.t >= t_end / 10.0 && s.t > 0.0)
        .collect();
    if tail.len() < MIN_TAIL_SAMPLES {
        return Err(Error::InsufficientTail(format!(
            "{} samples in the final decade, need {MIN_TAIL_SAMPLES}",
            tail.len()
        )));
    }
    let sign = tail[0].point.xi2().signum();
    let mut prev = f64::INFINITY;
    for s in &tail {
        let gap = (s.point.x2() - x2_inf).abs();
        if s.point.xi2().signum() != sign || sign == 0.0 {
            return Err(Error::InsufficientTail("xi2 changes sign in the tail".into()));
        }
        if gap == 0.0 || gap > prev {
            return Err(Error::InsufficientTail(
                "x2 does not approach the limit monotonically".into(),
            ));
        }
        prev = gap;
    }
    let log_t: Vec<f64> = tail.iter().map(|s| s.t.ln()).collect();
    let log_gap: Vec<f64> = tail.iter().map(|s| (s.point.x2() - x2_inf).abs().ln()).collect();
    let (exponent, _, _, _) = linear_fit(&log_t, &log_gap);

    let shifted: Vec<f64> = log_gap.iter().zip(&log_t).map(|(g, t)| g + 2.0 * t).collect();
    let log_c1 = shifted.iter().sum::<f64>() / shifted.len() as f64;
    let log_residual =
        (shifted.iter().map(|v| (v - log_c1).powi(2)).sum::<f64>() / shifted.len() as f64).sqrt();
    let c1 = log_c1.exp() * (tail[tail.len() - 1].point.x2() - x2_inf).signum();

    let ts: Vec<f64> = tail.iter().map(|s| s.t).collect();
    let xi2: Vec<f64> = tail.iter().map(|s| s.point.xi2()).collect();
    let (c2, _, _, r_squared) = linear_fit(&ts, &xi2);

    Ok(AsymptoticRates {
        c1,
        c2,
        exponent,
        log_residual,
        r_squared,
        samples: tail.len(),
    })
}
