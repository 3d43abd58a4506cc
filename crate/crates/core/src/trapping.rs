//! Capture criteria and the two constructions of trapped rays: drift
//! velocities, the one-period drift integral, the singular family built on
//! a negative lobe of `u1`, the periodic family on a betaplane jet, and
//! parallel scans of phase space.

use crate::classify::{classify, Classification, ClassifyOptions, TrajectoryClass};
use crate::dynamics::{integrate, IntegrateOptions, PhasePoint, SampleSpec};
use crate::error::{Error, Result};
use crate::numeric::{bisect, linspace, QuadTolerance};
use crate::ode::Tolerances;
use crate::profiles::{zeros_in, Profiles};
use crate::reduced::{inverse_sqrt_integral, rho, turning_point_integral, EndpointKind, PotentialReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrappingMethod {
    PeriodAverage,
    AsymptoticLimit,
    CritperQuadrature,
}

/// Long-time average of `x1_dot` and the resulting capture verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrappingVerdict {
    pub drift: f64,
    pub trapped: bool,
    pub method: TrappingMethod,
    pub tolerance: f64,
}

impl TrappingVerdict {
    fn new(drift: f64, method: TrappingMethod, tolerance: f64) -> Self {
        Self {
            drift,
            trapped: drift.abs() < tolerance,
            method,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrappingOptions {
    pub classify: ClassifyOptions,
    /// Integrator tolerances for the one-period run.
    pub tolerances: Tolerances,
    /// `|drift|` below this counts as trapped.
    pub threshold: f64,
}

impl Default for TrappingOptions {
    fn default() -> Self {
        Self {
            classify: ClassifyOptions::default(),
            tolerances: Tolerances::new(1e-12, 1e-12),
            threshold: 1e-6,
        }
    }
}

/// Drift of an already classified point.
pub fn drift_for_class(
    p0: &PhasePoint,
    class: &TrajectoryClass,
    profiles: &Profiles,
    opts: &TrappingOptions,
) -> Result<TrappingVerdict> {
    match *class {
        TrajectoryClass::Periodic { period, .. } => {
            let iopts = IntegrateOptions::default()
                .with_samples(SampleSpec::EndPoints)
                .with_tolerances(opts.tolerances);
            let traj = integrate(p0, period, &iopts, profiles)?;
            let drift = (traj.last().point.x1() - p0.x1()) / period;
            Ok(TrappingVerdict::new(drift, TrappingMethod::PeriodAverage, opts.threshold))
        }
        TrajectoryClass::Asymptotic { x2_inf, .. } => Ok(TrappingVerdict::new(
            profiles.zonal.value(x2_inf),
            TrappingMethod::AsymptoticLimit,
            opts.threshold,
        )),
        other => Err(Error::Pathological(other.label().to_string())),
    }
}

/// Classifies `p0` and returns its drift velocity: one integrated period
/// for periodic motion, `u1(x2inf)` for asymptotic motion.
pub fn drift_velocity(
    p0: &PhasePoint,
    profiles: &Profiles,
    opts: &TrappingOptions,
) -> Result<TrappingVerdict> {
    let c = classify(p0, profiles, &opts.classify)?;
    drift_for_class(p0, &c.class, profiles, opts)
}

/// `int [xi1^2 - a b'(y) / (2 (a - u1(y))^2)] V^{-1/2} dy` over the band,
/// with `a = tau/xi1`. Vanishes exactly when the periodic ray is trapped.
pub fn critper(report: &PotentialReport, tol: QuadTolerance) -> Result<f64> {
    let a = report.tau / report.xi1;
    let xi1_sq = report.xi1 * report.xi1;
    let p = report.profiles;
    turning_point_integral(
        report,
        |y| {
            let gap = a - p.zonal.value(y);
            xi1_sq - a * p.coriolis.d1(y) / (2.0 * gap * gap)
        },
        tol,
    )
}

/// Drift computed from the band alone:
/// `-(2/(|xi1| T)) int sign(b') [..] V^{-1/2} dy`, the integrand of
/// [`critper`] weighted by the sign of `b'`.
pub fn critper_drift(report: &PotentialReport, period: f64, tol: QuadTolerance) -> Result<f64> {
    let a = report.tau / report.xi1;
    let xi1_sq = report.xi1 * report.xi1;
    let p = report.profiles;
    let integral = turning_point_integral(
        report,
        |y| {
            let gap = a - p.zonal.value(y);
            let b1 = p.coriolis.d1(y);
            b1.signum() * (xi1_sq - a * b1 / (2.0 * gap * gap))
        },
        tol,
    )?;
    Ok(-2.0 * integral / (report.xi1.abs() * period))
}

/// An interval `(y1, y2)` between consecutive zeros of `u1` on which
/// `rho = -b'/u1 - b^2` is defined and blows up at both ends, with
/// `n = max(0, inf rho)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lobe {
    pub y1: f64,
    pub y2: f64,
    pub n: f64,
}

const LOBE_GRID: usize = 10_000;

/// The lowest lobe of the current on which `-b'/u1 > 0`.
pub fn negative_lobe(profiles: &Profiles) -> Result<Lobe> {
    let u1 = &profiles.zonal;
    let (s_lo, s_hi) = u1
        .support()
        .ok_or_else(|| Error::InvalidArgument("the current is identically zero".into()))?;
    let mut cuts = vec![s_lo];
    cuts.extend(zeros_in(|y| u1.value(y), s_lo, s_hi, 1e-14).into_iter().filter(|&y| y > s_lo && y < s_hi));
    cuts.push(s_hi);
    for w in cuts.windows(2) {
        let (y1, y2) = (w[0], w[1]);
        let mid = 0.5 * (y1 + y2);
        if -profiles.coriolis.d1(mid) / u1.value(mid) > 0.0 {
            let inner = &linspace(y1, y2, LOBE_GRID + 1)[1..LOBE_GRID];
            let inf = inner
                .iter()
                .filter_map(|&y| rho(y, profiles).ok())
                .fold(f64::INFINITY, f64::min);
            return Ok(Lobe {
                y1,
                y2,
                n: inf.max(0.0),
            });
        }
    }
    Err(Error::InvalidArgument(
        "no interval where -b'/u1 is positive".into(),
    ))
}

/// `h(xi1) = sup { y in (y1, y2) : rho(y) <= xi1^2 }`.
pub fn h_of_xi1(xi1: f64, lobe: &Lobe, profiles: &Profiles) -> Result<f64> {
    let level = xi1 * xi1;
    if level < lobe.n {
        return Err(Error::BelowThreshold { xi1_sq: level, n: lobe.n });
    }
    let grid = linspace(lobe.y1, lobe.y2, LOBE_GRID + 1);
    let f = |y: f64| rho(y, profiles).map(|r| r - level).unwrap_or(f64::INFINITY);
    for i in (1..LOBE_GRID).rev() {
        if f(grid[i]) <= 0.0 {
            return Ok(bisect(f, grid[i], grid[i + 1], 1e-14));
        }
    }
    Err(Error::BelowThreshold { xi1_sq: level, n: lobe.n })
}

/// The zero-energy seed `(x1, xi1, x2, sqrt(rho(x2) - xi1^2))`, which moves
/// toward the lobe edge `y2`.
pub fn lambda_sing_point(
    x1: f64,
    xi1: f64,
    x2: f64,
    lobe: &Lobe,
    profiles: &Profiles,
) -> Result<PhasePoint> {
    let h = h_of_xi1(xi1, lobe, profiles)?;
    if !(x2 > h && x2 < lobe.y2) {
        return Err(Error::OutOfWindow(format!(
            "x2 = {x2} is outside ({h}, {})",
            lobe.y2
        )));
    }
    let r = rho(x2, profiles)? - xi1 * xi1;
    if r < 0.0 {
        return Err(Error::OutOfWindow(format!("rho(x2) - xi1^2 = {r} < 0")));
    }
    let p = PhasePoint::new(x1, xi1, x2, r.sqrt())?;
    // x2_dot = -2 b' xi1 xi2 / D^2 must point toward y2
    if -profiles.coriolis.d1(x2) * xi1 * p.xi2() <= 0.0 {
        return Err(Error::OutOfWindow(format!(
            "xi1 = {xi1} makes the seed move away from y2"
        )));
    }
    Ok(p)
}

/// Parameters of the periodic trapped family on a betaplane with `beta = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaPerSetup {
    pub eta: f64,
    pub delta: f64,
    pub xi1_range: (f64, f64),
}

const ETA_CANDIDATES: usize = 12;

impl LambdaPerSetup {
    pub fn with_eta(eta: f64, profiles: &Profiles) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidArgument(format!("eta must lie in (0, 1), got {eta}")));
        }
        if profiles.coriolis.betaplane_slope() != Some(1.0) {
            return Err(Error::InvalidArgument(
                "the periodic construction needs a betaplane with beta = 1".into(),
            ));
        }
        let ys = linspace(-eta, eta, 401);
        let sup_u2 = ys
            .iter()
            .map(|&y| profiles.zonal.d2(y))
            .fold(f64::NEG_INFINITY, f64::max);
        if !(sup_u2 < -3.0) {
            return Err(Error::InvalidArgument(format!(
                "sup u1'' on (-{eta}, {eta}) is {sup_u2}, need < -3"
            )));
        }
        let setup = Self {
            eta,
            delta: 1.0 - eta * eta / 8.0,
            xi1_range: (1.0, 50.0),
        };
        // H'' = (2 xi1^2 - 6 y^2)/(xi1^2 + y^2)^3 - u1''
        for xi1 in linspace(setup.xi1_range.0, setup.xi1_range.1, 50) {
            for &y in &ys {
                let d = xi1 * xi1 + y * y;
                let h2 = (2.0 * xi1 * xi1 - 6.0 * y * y) / (d * d * d) - profiles.zonal.d2(y);
                if h2 < 0.5 {
                    return Err(Error::InvalidArgument(format!(
                        "H'' = {h2} < 1/2 at xi1 = {xi1}, y = {y}"
                    )));
                }
            }
        }
        Ok(setup)
    }

    /// Largest `eta` in `0.4, 0.2, 0.1, ...` passing both checks.
    pub fn auto(profiles: &Profiles) -> Result<Self> {
        let mut eta = 0.4;
        let mut last = None;
        for _ in 0..ETA_CANDIDATES {
            match Self::with_eta(eta, profiles) {
                Ok(s) => return Ok(s),
                Err(e) => last = Some(e),
            }
            eta *= 0.5;
        }
        Err(last.expect("at least one candidate tried"))
    }

    /// `tau(xi1) = u1(0) xi1 + delta/xi1`.
    pub fn tau(&self, xi1: f64, profiles: &Profiles) -> f64 {
        profiles.zonal.value(0.0) * xi1 + self.delta / xi1
    }

    /// `a - u1(y)` with `a = tau/xi1 = u1(0) + delta/xi1^2`.
    fn gap(&self, xi1: f64, y: f64, profiles: &Profiles) -> f64 {
        self.delta / (xi1 * xi1) + profiles.zonal.drop(0.0, y)
    }

    /// `1 - (a - u1(y)) (xi1^2 + y^2)`, expanded so that no two large terms
    /// cancel. Equals `V (a - u1)` and `-H (xi1^2 + y^2)`.
    fn numerator(&self, xi1: f64, y: f64, profiles: &Profiles) -> f64 {
        let d = xi1 * xi1 + y * y;
        self.eta * self.eta / 8.0
            - self.delta * y * y / (xi1 * xi1)
            - profiles.zonal.drop(0.0, y) * d
    }

    fn numerator_d1(&self, xi1: f64, y: f64, profiles: &Profiles) -> f64 {
        let d = xi1 * xi1 + y * y;
        -2.0 * self.delta * y / (xi1 * xi1) + profiles.zonal.d1(y) * d
            - 2.0 * y * profiles.zonal.drop(0.0, y)
    }

    /// `H(y) = tau/xi1 - 1/(xi1^2 + y^2) - u1(y)`, whose zeros are the
    /// turning points.
    pub fn h_function(&self, xi1: f64, y: f64, profiles: &Profiles) -> f64 {
        -self.numerator(xi1, y, profiles) / (xi1 * xi1 + y * y)
    }

    /// The potential `V` on the band, free of cancellation.
    pub fn potential(&self, xi1: f64, y: f64, profiles: &Profiles) -> f64 {
        self.numerator(xi1, y, profiles) / self.gap(xi1, y, profiles)
    }

    fn turning_point(&self, xi1: f64, a: f64, b: f64, profiles: &Profiles) -> f64 {
        let n = |y: f64| self.numerator(xi1, y, profiles);
        let mut y = bisect(n, a, b, 1e-15);
        for _ in 0..3 {
            let d = self.numerator_d1(xi1, y, profiles);
            if d == 0.0 {
                break;
            }
            let step = n(y) / d;
            if !(step.abs() < 1e-12) {
                break;
            }
            y -= step;
        }
        y
    }

    /// The periodic band at `xi1`, with turning points found on `(-eta, 0)`
    /// and `(0, eta)`.
    pub fn band(&self, xi1: f64, profiles: &Profiles) -> Result<PotentialReport> {
        let h = |y: f64| self.h_function(xi1, y, profiles);
        let (h_lo, h0, h_hi) = (h(-self.eta), h(0.0), h(self.eta));
        if !(h_lo > 0.0 && h0 < 0.0 && h_hi > 0.0) {
            return Err(Error::NoTurningPoints {
                xi1,
                reason: format!("H(-eta) = {h_lo}, H(0) = {h0}, H(eta) = {h_hi}"),
            });
        }
        Ok(PotentialReport {
            tau: self.tau(xi1, profiles),
            xi1,
            x2_0: 0.0,
            xmin: self.turning_point(xi1, -self.eta, 0.0, profiles),
            xmax: self.turning_point(xi1, 0.0, self.eta, profiles),
            lower: EndpointKind::SimpleZero,
            upper: EndpointKind::SimpleZero,
            profiles: *profiles,
        })
    }

    /// Seed on the band at `x2 = 0`, `xi2 = sqrt(V(0))`.
    pub fn seed(&self, xi1: f64, profiles: &Profiles) -> Result<PhasePoint> {
        let v = self.potential(xi1, 0.0, profiles);
        PhasePoint::new(0.0, xi1, 0.0, v.max(0.0).sqrt())
    }
}

/// `G(xi1) = int [xi1^2 - a / (2 (a - u1)^2)] V^{-1/2} dy` over the band of
/// [`LambdaPerSetup::band`], with `a = tau/xi1`.
pub fn lambda_per_g(
    xi1: f64,
    setup: &LambdaPerSetup,
    profiles: &Profiles,
    tol: QuadTolerance,
) -> Result<f64> {
    let band = setup.band(xi1, profiles)?;
    let a = band.tau / xi1;
    let dv = |y: f64| {
        (setup.numerator_d1(xi1, y, profiles) / setup.gap(xi1, y, profiles)).abs()
    };
    inverse_sqrt_integral(
        band.xmin,
        band.xmax,
        |y| setup.potential(xi1, y, profiles),
        (dv(band.xmin), dv(band.xmax)),
        |y| {
            let g = setup.gap(xi1, y, profiles);
            xi1 * xi1 - a / (2.0 * g * g)
        },
        tol,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaPerRoot {
    pub xi1: f64,
    pub bracket: (f64, f64),
    /// Central-difference `G'` at the root; the construction needs it nonzero.
    pub slope: f64,
    pub setup: LambdaPerSetup,
}

/// First sign change of `G` on the setup's `xi1` range, scanned on `cells`
/// cells and bisected to `width`.
pub fn lambda_per_root(
    setup: &LambdaPerSetup,
    profiles: &Profiles,
    cells: usize,
    width: f64,
    tol: QuadTolerance,
) -> Result<LambdaPerRoot> {
    let g = |x: f64| lambda_per_g(x, setup, profiles, tol);
    let grid = linspace(setup.xi1_range.0, setup.xi1_range.1, cells.max(1) + 1);
    let mut prev = (grid[0], g(grid[0])?);
    for &x in &grid[1..] {
        let gx = g(x)?;
        if prev.1 == 0.0 {
            return finish_root(prev.0, (prev.0, prev.0), setup, &g);
        }
        if prev.1 * gx < 0.0 {
            let (mut a, mut b) = (prev.0, x);
            let ga = prev.1;
            while b - a > width {
                let m = 0.5 * (a + b);
                let gm = g(m)?;
                if gm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if (gm > 0.0) == (ga > 0.0) {
                    a = m;
                } else {
                    b = m;
                }
            }
            return finish_root(0.5 * (a + b), (a, b), setup, &g);
        }
        prev = (x, gx);
    }
    Err(Error::NoRoot(format!(
        "G keeps one sign on [{}, {}]",
        setup.xi1_range.0, setup.xi1_range.1
    )))
}

fn finish_root<G: Fn(f64) -> Result<f64>>(
    xi1: f64,
    bracket: (f64, f64),
    setup: &LambdaPerSetup,
    g: &G,
) -> Result<LambdaPerRoot> {
    let h = 1e-5;
    let slope = (g(xi1 + h)? - g(xi1 - h)?) / (2.0 * h);
    Ok(LambdaPerRoot {
        xi1,
        bracket,
        slope,
        setup: *setup,
    })
}

/// Tensor grid of seeds, iterated with `xi1` outermost and `xi2_0` innermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanGrid {
    pub xi1: Vec<f64>,
    pub x2_0: Vec<f64>,
    pub xi2_0: Vec<f64>,
}

impl ScanGrid {
    pub fn len(&self) -> usize {
        self.xi1.len() * self.x2_0.len() * self.xi2_0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.len());
        for &a in &self.xi1 {
            for &b in &self.x2_0 {
                for &c in &self.xi2_0 {
                    out.push((a, b, c));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub xi1: f64,
    pub x2_0: f64,
    pub xi2_0: f64,
    pub tau: Option<f64>,
    pub class: Option<TrajectoryClass>,
    pub margin: Option<f64>,
    pub drift: Option<f64>,
    pub trapped: Option<bool>,
    pub error: Option<String>,
}

fn scan_point(xi1: f64, x2: f64, xi2: f64, profiles: &Profiles, opts: &TrappingOptions) -> ScanRow {
    let mut row = ScanRow {
        xi1,
        x2_0: x2,
        xi2_0: xi2,
        tau: None,
        class: None,
        margin: None,
        drift: None,
        trapped: None,
        error: None,
    };
    let p0 = match PhasePoint::new(0.0, xi1, x2, xi2) {
        Ok(p) => p,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.tau = Some(crate::dynamics::energy(&p0, profiles));
    let c: Classification = match classify(&p0, profiles, &opts.classify) {
        Ok(c) => c,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.margin = Some(c.margin.min());
    row.class = Some(c.class);
    if c.class.is_generic() {
        match drift_for_class(&p0, &c.class, profiles, opts) {
            Ok(v) => {
                row.drift = Some(v.drift);
                row.trapped = Some(v.trapped);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    row
}

/// Classifies every grid seed and computes its drift, in parallel. Rows come
/// back in grid order; failures are recorded per row.
pub fn scan_lambda(grid: &ScanGrid, profiles: &Profiles, opts: &TrappingOptions) -> Vec<ScanRow> {
    grid.points()
        .par_iter()
        .map(|&(a, b, c)| scan_point(a, b, c, profiles, opts))
        .collect()
}
