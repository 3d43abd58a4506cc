//! Rossby principal symbol, its Hamiltonian vector field, and integration
//! of bicharacteristics.
//!
//! The symbol does not depend on `x1`, so `xi1` is a constant of motion. The
//! integrator works on the reduced state `(x1, x2, xi2)` with `xi1` frozen.

use crate::error::{Error, Result};
use crate::ode::{self, EventFn, OdeSystem, Sampling, SolverOptions, Termination, Tolerances};
use crate::profiles::Profiles;
use serde::{Deserialize, Serialize};

/// A point `(x1, xi1, x2, xi2)` of the cotangent space, with `xi1 != 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    x1: f64,
    xi1: f64,
    x2: f64,
    xi2: f64,
}

impl PhasePoint {
    pub fn new(x1: f64, xi1: f64, x2: f64, xi2: f64) -> Result<Self> {
        if xi1 == 0.0 || !xi1.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "xi1 must be nonzero and finite, got {xi1}"
            )));
        }
        if !(x1.is_finite() && x2.is_finite() && xi2.is_finite()) {
            return Err(Error::InvalidArgument("non-finite phase coordinate".into()));
        }
        Ok(Self { x1, xi1, x2, xi2 })
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }
    pub fn xi1(&self) -> f64 {
        self.xi1
    }
    pub fn x2(&self) -> f64 {
        self.x2
    }
    pub fn xi2(&self) -> f64 {
        self.xi2
    }

    /// Same `xi1` and `x1`, new reduced coordinates.
    pub fn with_reduced(&self, x2: f64, xi2: f64) -> Self {
        Self { x2, xi2, ..*self }
    }

    pub(crate) fn from_state(xi1: f64, s: &[f64; 3]) -> Self {
        Self {
            x1: s[0],
            xi1,
            x2: s[1],
            xi2: s[2],
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x1, self.xi1, self.x2, self.xi2]
    }
}

impl<'de> Deserialize<'de> for PhasePoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x1, xi1, x2, xi2] = <[f64; 4]>::deserialize(d)?;
        PhasePoint::new(x1, xi1, x2, xi2).map_err(serde::de::Error::custom)
    }
}

/// `b'(x2) xi1 / (xi1^2 + xi2^2 + b^2(x2)) + u1(x2) xi1`.
pub fn rossby_symbol(xi1: f64, x2: f64, xi2: f64, profiles: &Profiles) -> Result<f64> {
    if xi1 == 0.0 {
        return Err(Error::InvalidArgument("rossby symbol requires xi1 != 0".into()));
    }
    Ok(symbol_unchecked(xi1, x2, xi2, profiles))
}

#[inline]
pub(crate) fn symbol_unchecked(xi1: f64, x2: f64, xi2: f64, profiles: &Profiles) -> f64 {
    let b = profiles.coriolis.jet(x2);
    let u = profiles.zonal.value(x2);
    b.d1 * xi1 / (xi1 * xi1 + xi2 * xi2 + b.value * b.value) + u * xi1
}

/// Energy of a phase point.
pub fn energy(p: &PhasePoint, profiles: &Profiles) -> f64 {
    symbol_unchecked(p.xi1, p.x2, p.xi2, profiles)
}

/// Right-hand sides of the reduced bicharacteristic system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorField {
    pub x1_dot: f64,
    pub x2_dot: f64,
    pub xi2_dot: f64,
}

#[inline]
fn field(xi1: f64, x2: f64, xi2: f64, profiles: &Profiles) -> VectorField {
    let b = profiles.coriolis.jet(x2);
    let u = profiles.zonal.jet(x2);
    let d = xi1 * xi1 + xi2 * xi2 + b.value * b.value;
    let d2 = d * d;
    VectorField {
        x1_dot: u.value + b.d1 * (-xi1 * xi1 + xi2 * xi2 + b.value * b.value) / d2,
        x2_dot: -2.0 * b.d1 * xi1 * xi2 / d2,
        xi2_dot: -u.d1 * xi1 + 2.0 * b.value * b.d1 * b.d1 * xi1 / d2 - b.d2 * xi1 / d,
    }
}

pub fn rossby_vector_field(p: &PhasePoint, profiles: &Profiles) -> VectorField {
    field(p.xi1, p.x2, p.xi2, profiles)
}

/// Reduced Rossby flow on `(x1, x2, xi2)` at fixed `xi1`.
#[derive(Debug, Clone, Copy)]
pub struct RossbySystem<'a> {
    pub xi1: f64,
    pub profiles: &'a Profiles,
}

impl OdeSystem<3> for RossbySystem<'_> {
    #[inline]
    fn rhs(&self, _t: f64, y: &[f64; 3]) -> [f64; 3] {
        let v = field(self.xi1, y[1], y[2], self.profiles);
        [v.x1_dot, v.x2_dot, v.xi2_dot]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleSpec {
    /// `count` equally spaced samples on `(0, horizon]`.
    Uniform { count: usize },
    Times { times: Vec<f64> },
    Steps,
    EndPoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RossbyEvent {
    /// `xi2` changes sign: a turning point of the `x2` motion.
    Xi2SignChange { terminal: bool },
    /// `|x2 - marker|` drops below `threshold`.
    NearMarker {
        marker: f64,
        threshold: f64,
        terminal: bool,
    },
}

impl RossbyEvent {
    fn terminal(&self) -> bool {
        match *self {
            RossbyEvent::Xi2SignChange { terminal } | RossbyEvent::NearMarker { terminal, .. } => {
                terminal
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrateOptions {
    pub tolerances: Tolerances,
    pub samples: SampleSpec,
    pub events: Vec<RossbyEvent>,
    /// Runs stop with [`Termination::Event`] once `|xi2|` exceeds this cap.
    pub xi2_cap: f64,
    pub max_step: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            samples: SampleSpec::Uniform { count: 1000 },
            events: Vec::new(),
            xi2_cap: 1e6,
            max_step: f64::INFINITY,
        }
    }
}

impl IntegrateOptions {
    pub fn with_samples(mut self, samples: SampleSpec) -> Self {
        self.samples = samples;
        self
    }
    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }
    pub fn with_event(mut self, event: RossbyEvent) -> Self {
        self.events.push(event);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub point: PhasePoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryEvent {
    /// Index into [`IntegrateOptions::events`].
    pub event: usize,
    pub t: f64,
    pub point: PhasePoint,
}

/// A time-sampled ray with invariant diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<TrajectoryEvent>,
    pub initial_energy: f64,
    /// `max |tau(sample) - tau(p0)|` over the samples.
    pub energy_drift: f64,
    pub termination: Termination,
}

impl Trajectory {
    pub fn xi1(&self) -> f64 {
        self.samples[0].point.xi1
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory holds its initial sample")
    }

    pub fn duration(&self) -> f64 {
        self.last().t - self.first().t
    }
}

fn sample_times(spec: &SampleSpec, horizon: f64) -> Vec<f64> {
    match spec {
        SampleSpec::Uniform { count } => (1..=*count)
            .map(|i| {
                if i == *count {
                    horizon
                } else {
                    horizon * i as f64 / *count as f64
                }
            })
            .collect(),
        SampleSpec::Times { times } => {
            let mut ts: Vec<f64> = times.iter().copied().filter(|&t| t > 0.0 && t <= horizon).collect();
            ts.sort_by(f64::total_cmp);
            ts.dedup();
            ts
        }
        SampleSpec::Steps | SampleSpec::EndPoints => Vec::new(),
    }
}

/// Integrates the bicharacteristic through `p0` over `[0, horizon]`.
pub fn integrate(
    p0: &PhasePoint,
    horizon: f64,
    opts: &IntegrateOptions,
    profiles: &Profiles,
) -> Result<Trajectory> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if !opts.tolerances.is_valid() {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    let xi1 = p0.xi1;
    let sys = RossbySystem { xi1, profiles };
    let times = sample_times(&opts.samples, horizon);
    let sampling = match opts.samples {
        SampleSpec::Uniform { .. } | SampleSpec::Times { .. } => Sampling::Times(&times),
        SampleSpec::Steps => Sampling::Steps,
        SampleSpec::EndPoints => Sampling::EndPoints,
    };
    let event_fns: Vec<Box<dyn Fn(f64, &[f64; 3]) -> f64>> = opts
        .events
        .iter()
        .map(|ev| -> Box<dyn Fn(f64, &[f64; 3]) -> f64> {
            match *ev {
                RossbyEvent::Xi2SignChange { .. } => Box::new(|_t, y: &[f64; 3]| y[2]),
                RossbyEvent::NearMarker {
                    marker, threshold, ..
                } => Box::new(move |_t, y: &[f64; 3]| (y[1] - marker).abs() - threshold),
            }
        })
        .collect();
    let events: Vec<EventFn<'_, 3>> = event_fns
        .iter()
        .zip(&opts.events)
        .map(|(g, ev)| EventFn {
            g: g.as_ref(),
            terminal: ev.terminal(),
        })
        .collect();
    let cap = opts.xi2_cap;
    let stop = move |y: &[f64; 3]| y[2].abs() > cap;
    let solver = SolverOptions {
        tolerances: opts.tolerances,
        max_step: opts.max_step,
        ..SolverOptions::default()
    };
    let sol = ode::solve(
        &sys,
        0.0,
        [p0.x1, p0.x2, p0.xi2],
        horizon,
        &solver,
        sampling,
        &events,
        Some(&stop),
    );
    let initial_energy = energy(p0, profiles);
    let samples: Vec<Sample> = sol
        .samples
        .iter()
        .map(|(t, s)| Sample {
            t: *t,
            point: PhasePoint::from_state(xi1, s),
        })
        .collect();
    let energy_drift = samples
        .iter()
        .map(|s| (energy(&s.point, profiles) - initial_energy).abs())
        .fold(0.0, f64::max);
    let events = sol
        .events
        .iter()
        .map(|h| TrajectoryEvent {
            event: h.index,
            t: h.t,
            point: PhasePoint::from_state(xi1, &h.y),
        })
        .collect();
    Ok(Trajectory {
        samples,
        events,
        initial_energy,
        energy_drift,
        termination: sol.termination,
    })
}

/// `x1(t) - x1(0)` at every sample, i.e. the running integral of `dx1/dt`.
pub fn wind_up_x1(traj: &Trajectory) -> Vec<(f64, f64)> {
    let x0 = traj.first().point.x1;
    traj.samples
        .iter()
        .map(|s| (s.t, s.point.x1 - x0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{make_betaplane, make_bump, ZonalProfile};
    use std::f64::consts::PI;

    fn beta1() -> Profiles {
        Profiles::betaplane(1.0).unwrap()
    }

    #[test]
    fn phase_point_rejects_zero_xi1() {
        assert!(PhasePoint::new(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(rossby_symbol(0.0, 0.0, 0.0, &beta1()).is_err());
    }

    #[test]
    fn symbol_examples() {
        let p = beta1();
        assert_eq!(rossby_symbol(1.0, 0.0, 0.0, &p).unwrap(), 1.0);
        assert_eq!(rossby_symbol(1.0, 0.0, 1.0, &p).unwrap(), 0.5);
        let q = Profiles::new(make_bump(0.0, 1.0, 0.5).unwrap(), make_betaplane(1.0).unwrap());
        assert!((rossby_symbol(2.0, 0.0, 0.0, &q).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn vector_field_examples() {
        let p = beta1();
        let v = rossby_vector_field(&PhasePoint::new(0.0, 1.0, 0.0, 1.0).unwrap(), &p);
        assert_eq!(v.x1_dot, 0.0);
        assert_eq!(v.x2_dot, -0.5);
        assert_eq!(v.xi2_dot, 0.0);
        let v = rossby_vector_field(&PhasePoint::new(0.0, 1.0, 1.0, 0.0).unwrap(), &p);
        assert_eq!(v.x2_dot, 0.0);
        assert_eq!(v.xi2_dot, 0.5);
    }

    #[test]
    fn vector_field_at_coriolis_critical_point() {
        let p = Profiles::new(
            ZonalProfile::Zero,
            crate::profiles::CoriolisProfile::Quadratic {
                curvature: 1.0,
                offset: 0.0,
            },
        );
        // b' = 0 at x2 = 0: x2 is frozen, only the b'' term drives xi2
        let v = rossby_vector_field(&PhasePoint::new(0.0, 1.0, 0.0, 0.3).unwrap(), &p);
        assert_eq!(v.x1_dot, 0.0);
        assert_eq!(v.x2_dot, 0.0);
        assert!(v.xi2_dot != 0.0);
    }

    #[test]
    fn trapped_circle_returns_after_period() {
        let p = beta1();
        let p0 = PhasePoint::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let traj = integrate(&p0, 4.0 * PI, &IntegrateOptions::default(), &p).unwrap();
        let last = traj.last().point;
        assert!((last.x2() - 0.0).abs() < 1e-6);
        assert!((last.xi2() - 1.0).abs() < 1e-6);
        assert!(traj.samples.iter().all(|s| s.point.x1().abs() < 1e-6));
        assert!(wind_up_x1(&traj).iter().all(|(_, d)| d.abs() < 1e-6));
        assert_eq!(traj.termination, Termination::Horizon);
    }

    #[test]
    fn drifting_ring_advances_by_pi_per_period() {
        let p = beta1();
        let p0 = PhasePoint::new(0.0, 1.0, 0.0, 2f64.sqrt()).unwrap();
        let traj = integrate(&p0, 9.0 * PI, &IntegrateOptions::default(), &p).unwrap();
        let dx1 = traj.last().point.x1() - p0.x1();
        assert!((dx1 - PI).abs() < 1e-5, "{dx1}");
        // drift velocity (r^2 - xi1^2)/(xi1^2 + r^2)^2 = 1/9
        let w = wind_up_x1(&traj);
        let (t, d) = w[w.len() - 1];
        assert!((d / t - 1.0 / 9.0).abs() < 1e-6);
    }

    #[test]
    fn xi1_is_constant_and_times_increase() {
        let p = beta1();
        let p0 = PhasePoint::new(0.3, -1.7, 0.4, 0.2).unwrap();
        let traj = integrate(&p0, 30.0, &IntegrateOptions::default(), &p).unwrap();
        assert!(traj.samples.iter().all(|s| s.point.xi1() == -1.7));
        assert!(traj.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn turning_point_events() {
        let p = beta1();
        let p0 = PhasePoint::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let opts = IntegrateOptions::default()
            .with_event(RossbyEvent::Xi2SignChange { terminal: false });
        let traj = integrate(&p0, 4.0 * PI, &opts, &p).unwrap();
        // xi2 = cos(omega t) with omega = 1/2: zeros at pi and 3 pi
        let ts: Vec<f64> = traj.events.iter().map(|e| e.t).collect();
        assert_eq!(ts.len(), 2, "{ts:?}");
        assert!((ts[0] - PI).abs() < 1e-8 && (ts[1] - 3.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_horizon() {
        let p0 = PhasePoint::new(0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(integrate(&p0, 0.0, &IntegrateOptions::default(), &beta1()).is_err());
        let bad = IntegrateOptions::default().with_tolerances(Tolerances::new(0.0, 1e-9));
        assert!(integrate(&p0, 1.0, &bad, &beta1()).is_err());
    }
}
