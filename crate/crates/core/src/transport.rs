//! Particle transport of phase-space measures along Rossby or Poincare
//! characteristics, and the mass a measure keeps inside a spatial box.

use crate::classify::{sigma_margin, SigmaOptions};
use crate::dynamics::{PhasePoint, RossbySystem};
use crate::error::{Error, Result};
use crate::modes::Branch;
use crate::numeric::halton;
use crate::ode::{self, OdeSystem, Sampling, SolverOptions, Tolerances};
use crate::profiles::{CoriolisProfile, Profiles};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Rossby,
    PoincarePlus,
    PoincareMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Active,
    /// The integrator failed; the particle keeps its last state and weight.
    Lost,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Active => "active",
            Status::Lost => "lost",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub point: PhasePoint,
    pub weight: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub particles: Vec<Particle>,
    pub mode: Mode,
    pub time: f64,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    pub fn lost_weight(&self) -> f64 {
        self.particles
            .iter()
            .filter(|p| p.status == Status::Lost)
            .map(|p| p.weight)
            .sum()
    }
}

/// Axis-aligned box in `(x1, xi1, x2, xi2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseBox {
    pub x1: (f64, f64),
    pub xi1: (f64, f64),
    pub x2: (f64, f64),
    pub xi2: (f64, f64),
}

impl PhaseBox {
    pub fn validate(&self) -> Result<()> {
        for (lo, hi) in [self.x1, self.xi1, self.x2, self.xi2] {
            if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
                return Err(Error::InvalidArgument(format!("bad interval [{lo}, {hi}]")));
            }
        }
        if self.xi1.0 <= 0.0 && self.xi1.1 >= 0.0 {
            return Err(Error::BoxTouchesZeroXi1);
        }
        Ok(())
    }

    fn point(&self, u: &[f64]) -> Result<PhasePoint> {
        let lerp = |(a, b): (f64, f64), t: f64| a + (b - a) * t;
        PhasePoint::new(
            lerp(self.x1, u[0]),
            lerp(self.xi1, u[1]),
            lerp(self.x2, u[2]),
            lerp(self.xi2, u[3]),
        )
    }
}

/// Axis-aligned box in physical space `(x1, x2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialBox {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
}

impl SpatialBox {
    pub fn contains(&self, p: &PhasePoint) -> bool {
        (self.x1.0..=self.x1.1).contains(&p.x1()) && (self.x2.0..=self.x2.1).contains(&p.x2())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    pub region: PhaseBox,
    pub count: usize,
    pub mode: Mode,
    /// Offset into the Halton sequence.
    pub seed: u64,
    /// Rossby points closer than this to the pathological set are redrawn.
    pub tol_sigma: f64,
    /// Total number of redraws allowed across the ensemble.
    pub retry_budget: usize,
}

/// Deterministic low-discrepancy sample of the region with equal weights.
pub fn sample_initial(spec: &SamplingSpec, profiles: &Profiles) -> Result<Ensemble> {
    spec.region.validate()?;
    if spec.count == 0 {
        return Err(Error::InvalidArgument("count must be positive".into()));
    }
    let weight = 1.0 / spec.count as f64;
    let mut next = spec.seed + 1;
    let mut retries = 0usize;
    let sigma = SigmaOptions::default();
    let mut particles = Vec::with_capacity(spec.count);
    while particles.len() < spec.count {
        let p = spec.region.point(&halton(next, 4))?;
        next += 1;
        let near_sigma = spec.mode == Mode::Rossby
            && sigma_margin(&p, profiles, &sigma).min() < spec.tol_sigma;
        if near_sigma && retries < spec.retry_budget {
            retries += 1;
            continue;
        }
        particles.push(Particle {
            point: p,
            weight,
            status: Status::Active,
        });
    }
    Ok(Ensemble {
        particles,
        mode: spec.mode,
        time: 0.0,
    })
}

/// Rossby ensemble on the trapped energy surfaces of a betaplane without
/// current: `xi2^2 + beta^2 x2^2 = xi1^2`, i.e. the circles of radius `|xi1|`
/// in `(beta x2, xi2)`.
pub fn trapped_circle_ensemble(
    count: usize,
    x1: (f64, f64),
    xi1: (f64, f64),
    seed: u64,
    profiles: &Profiles,
) -> Result<Ensemble> {
    let beta = match (profiles.zonal, profiles.coriolis) {
        (crate::profiles::ZonalProfile::Zero, CoriolisProfile::Betaplane { beta }) => beta,
        _ => {
            return Err(Error::InvalidArgument(
                "trapped circles need a betaplane without current".into(),
            ))
        }
    };
    if count == 0 {
        return Err(Error::InvalidArgument("count must be positive".into()));
    }
    if xi1.0 <= 0.0 && xi1.1 >= 0.0 {
        return Err(Error::BoxTouchesZeroXi1);
    }
    let weight = 1.0 / count as f64;
    let particles = (0..count as u64)
        .map(|i| {
            let u = halton(seed + i + 1, 3);
            let k = xi1.0 + (xi1.1 - xi1.0) * u[1];
            let theta = TAU * u[2];
            let point = PhasePoint::new(
                x1.0 + (x1.1 - x1.0) * u[0],
                k,
                k.abs() * theta.cos() / beta,
                k.abs() * theta.sin(),
            )?;
            Ok(Particle {
                point,
                weight,
                status: Status::Active,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        particles,
        mode: Mode::Rossby,
        time: 0.0,
    })
}

/// Classical flow of `tau_± = ±sqrt(xi1^2 + xi2^2 + b^2)` on `(x1, x2, xi2)`.
pub struct PoincareSystem<'a> {
    pub branch: Branch,
    pub xi1: f64,
    pub coriolis: &'a CoriolisProfile,
}

impl OdeSystem<3> for PoincareSystem<'_> {
    #[inline]
    fn rhs(&self, _t: f64, y: &[f64; 3]) -> [f64; 3] {
        let b = self.coriolis.jet(y[1]);
        let s = (self.xi1 * self.xi1 + y[2] * y[2] + b.value * b.value).sqrt();
        let k = self.branch.sign() / s;
        [k * self.xi1, k * y[2], -k * b.value * b.d1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportOptions {
    pub tolerances: Tolerances,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::new(1e-9, 1e-9),
        }
    }
}

fn advance(
    p: &Particle,
    mode: Mode,
    t0: f64,
    times: &[f64],
    profiles: &Profiles,
    opts: &TransportOptions,
) -> Vec<Particle> {
    let xi1 = p.point.xi1();
    if p.status == Status::Lost {
        return vec![*p; times.len()];
    }
    let end = match times.last() {
        Some(&t) => t,
        None => return Vec::new(),
    };
    let solver = SolverOptions {
        tolerances: opts.tolerances,
        ..SolverOptions::default()
    };
    let y0 = [p.point.x1(), p.point.x2(), p.point.xi2()];
    let sol = match mode {
        Mode::Rossby => ode::solve(
            &RossbySystem { xi1, profiles },
            t0,
            y0,
            end,
            &solver,
            Sampling::Times(times),
            &[],
            None,
        ),
        Mode::PoincarePlus | Mode::PoincareMinus => ode::solve(
            &PoincareSystem {
                branch: if mode == Mode::PoincarePlus {
                    Branch::Plus
                } else {
                    Branch::Minus
                },
                xi1,
                coriolis: &profiles.coriolis,
            },
            t0,
            y0,
            end,
            &solver,
            Sampling::Times(times),
            &[],
            None,
        ),
    };
    // requested times at or before t0 are not echoed by the solver
    let mut k = 1;
    let lost_state = sol.last().1;
    times
        .iter()
        .map(|&ti| {
            let reached = if ti <= t0 {
                Some(y0)
            } else {
                while k < sol.samples.len() && sol.samples[k].0 < ti {
                    k += 1;
                }
                sol.samples.get(k).filter(|s| s.0 == ti).map(|s| s.1)
            };
            let (y, status) = match reached {
                Some(y) => (y, Status::Active),
                None => (lost_state, Status::Lost),
            };
            if y.iter().all(|v| v.is_finite()) {
                Particle {
                    point: PhasePoint::from_state(xi1, &y),
                    weight: p.weight,
                    status,
                }
            } else {
                Particle {
                    status: Status::Lost,
                    ..*p
                }
            }
        })
        .collect()
}

/// Snapshots of the ensemble at each of `times` (absolute, increasing, not
/// before `e.time`). Particles are integrated independently in parallel.
pub fn propagate_snapshots(
    e: &Ensemble,
    times: &[f64],
    profiles: &Profiles,
    opts: &TransportOptions,
) -> Result<Vec<Ensemble>> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < e.time) {
        return Err(Error::InvalidArgument(
            "snapshot times must be increasing and not before the ensemble time".into(),
        ));
    }
    let tracks: Vec<Vec<Particle>> = e
        .particles
        .par_iter()
        .map(|p| advance(p, e.mode, e.time, times, profiles, opts))
        .collect();
    Ok(times
        .iter()
        .enumerate()
        .map(|(i, &t)| Ensemble {
            particles: tracks.iter().map(|track| track[i]).collect(),
            mode: e.mode,
            time: t,
        })
        .collect())
}

/// The ensemble `dt` later.
pub fn propagate(
    e: &Ensemble,
    dt: f64,
    profiles: &Profiles,
    opts: &TransportOptions,
) -> Result<Ensemble> {
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be nonnegative, got {dt}")));
    }
    if dt == 0.0 {
        return Ok(e.clone());
    }
    Ok(propagate_snapshots(e, &[e.time + dt], profiles, opts)?.remove(0))
}

/// Weight of active particles inside the box over the total weight.
pub fn mass_in_box(e: &Ensemble, region: &SpatialBox) -> f64 {
    let total = e.total_weight();
    if total == 0.0 {
        return 0.0;
    }
    let inside: f64 = e
        .particles
        .iter()
        .filter(|p| p.status == Status::Active && region.contains(&p.point))
        .map(|p| p.weight)
        .fold(0.0, |a, w| a + w);
    inside / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::make_betaplane;

    fn beta1() -> Profiles {
        Profiles::betaplane(1.0).unwrap()
    }

    fn spec(count: usize, mode: Mode) -> SamplingSpec {
        SamplingSpec {
            region: PhaseBox {
                x1: (-0.5, 0.5),
                xi1: (1.0, 2.0),
                x2: (-0.5, 0.5),
                xi2: (-0.5, 0.5),
            },
            count,
            mode,
            seed: 7,
            tol_sigma: 1e-6,
            retry_budget: 100,
        }
    }

    #[test]
    fn sampling_is_deterministic_and_normalized() {
        let a = sample_initial(&spec(64, Mode::Rossby), &beta1()).unwrap();
        let b = sample_initial(&spec(64, Mode::Rossby), &beta1()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        assert!((a.total_weight() - 1.0).abs() < 1e-14);
        assert!(a.particles.iter().all(|p| p.point.xi1() >= 1.0));
    }

    #[test]
    fn box_through_zero_xi1_is_rejected() {
        let mut s = spec(4, Mode::Rossby);
        s.region.xi1 = (-1.0, 1.0);
        assert_eq!(sample_initial(&s, &beta1()), Err(Error::BoxTouchesZeroXi1));
    }

    #[test]
    fn zero_time_is_identity() {
        let e = sample_initial(&spec(8, Mode::PoincarePlus), &beta1()).unwrap();
        assert_eq!(propagate(&e, 0.0, &beta1(), &TransportOptions::default()).unwrap(), e);
    }

    #[test]
    fn snapshots_line_up_with_requested_times() {
        let p = beta1();
        let opts = TransportOptions::default();
        let e = sample_initial(&spec(4, Mode::PoincarePlus), &p).unwrap();
        let snaps = propagate_snapshots(&e, &[0.0, 5.0, 10.0], &p, &opts).unwrap();
        assert_eq!(snaps[0].particles, e.particles);
        for (i, t) in [(1, 5.0), (2, 10.0)] {
            let direct = propagate(&e, t, &p, &opts).unwrap();
            assert_eq!(snaps[i].time, direct.time);
            for (a, b) in snaps[i].particles.iter().zip(&direct.particles) {
                let (a, b) = (a.point.as_array(), b.point.as_array());
                assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-7), "{a:?} {b:?}");
            }
        }
        assert!(snaps.iter().all(|s| s.lost_weight() == 0.0));
    }

    #[test]
    fn poincare_rays_move_at_the_group_speed() {
        let p = beta1();
        let e = sample_initial(&spec(32, Mode::PoincarePlus), &p).unwrap();
        let t = 50.0;
        let out = propagate(&e, t, &p, &TransportOptions::default()).unwrap();
        for (a, b) in e.particles.iter().zip(&out.particles) {
            let q = a.point;
            let lambda = q.xi2().powi(2) + q.x2().powi(2);
            let c = crate::spectral::group_speed(q.xi1(), lambda, 0.0).unwrap();
            let dx = b.point.x1() - q.x1();
            assert!((dx - c * t).abs() < 0.05 * c * t, "{dx} {}", c * t);
        }
    }

    #[test]
    fn trapped_circles_stay_in_a_box() {
        let p = make_betaplane(2.0).map(|b| Profiles::new(crate::ZonalProfile::Zero, b)).unwrap();
        let e = trapped_circle_ensemble(16, (-0.5, 0.5), (1.0, 2.0), 3, &p).unwrap();
        let k = SpatialBox {
            x1: (-5.0, 5.0),
            x2: (-3.0, 3.0),
        };
        assert_eq!(mass_in_box(&e, &k), 1.0);
        let snaps = propagate_snapshots(&e, &[100.0, 300.0], &p, &TransportOptions::default()).unwrap();
        for s in &snaps {
            assert_eq!(mass_in_box(s, &k), 1.0);
            assert!((s.total_weight() - 1.0).abs() < 1e-14);
            assert_eq!(s.lost_weight(), 0.0);
        }
    }
}
