//! Adaptive Dormand-Prince 5(4) integrator with cubic Hermite dense output
//! and bisection-localized events.

use serde::{Deserialize, Serialize};

/// Right-hand side of `dy/dt = f(t, y)`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    pub fn is_valid(&self) -> bool {
        self.abs > 0.0 && self.rel > 0.0 && self.abs.is_finite() && self.rel.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tolerances: Tolerances,
    /// Upper bound on `|h|`; infinite by default.
    pub max_step: f64,
    /// Hard cap on attempted steps.
    pub max_steps: usize,
    /// Event times are localized to this accuracy.
    pub event_time_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            max_step: f64::INFINITY,
            max_steps: 50_000_000,
            event_time_tol: 1e-10,
        }
    }
}

/// Which states the solver records besides the initial and final ones.
#[derive(Debug, Clone, Copy)]
pub enum Sampling<'a> {
    /// Interpolated states at these times (monotone in the integration
    /// direction).
    Times(&'a [f64]),
    /// Every accepted step.
    Steps,
    /// Initial and final states only.
    EndPoints,
}

/// Scalar event function; a root is reported on every sign change.
pub struct EventFn<'a, const N: usize> {
    pub g: &'a dyn Fn(f64, &[f64; N]) -> f64,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<const N: usize> {
    pub index: usize,
    pub t: f64,
    pub y: [f64; N],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Horizon,
    Event,
    StepFailure,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub rhs_evals: u64,
    pub accepted: u64,
    pub rejected: u64,
}

#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub samples: Vec<(f64, [f64; N])>,
    pub events: Vec<EventHit<N>>,
    pub termination: Termination,
    pub stats: Stats,
}

impl<const N: usize> Solution<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        *self.samples.last().expect("solution always holds the initial state")
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

fn error_norm<const N: usize>(
    y0: &[f64; N],
    y1: &[f64; N],
    err: &[f64; N],
    tol: &Tolerances,
) -> f64 {
    let mut sum = 0.0;
    for i in 0..N {
        let sc = tol.abs + tol.rel * y0[i].abs().max(y1[i].abs());
        let r = err[i] / sc;
        sum += r * r;
    }
    (sum / N as f64).sqrt()
}

/// Cubic Hermite interpolant on one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct HermiteStep<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub f0: [f64; N],
    pub f1: [f64; N],
}

impl<const N: usize> HermiteStep<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = h00 * self.y0[i]
                + h10 * h * self.f0[i]
                + h01 * self.y1[i]
                + h11 * h * self.f1[i];
        }
        out
    }
}

fn initial_step<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    tol: &Tolerances,
    stats: &mut Stats,
) -> f64 {
    let scale = |i: usize, y: &[f64; N]| tol.abs + tol.rel * y[i].abs();
    let norm = |v: &[f64; N], y: &[f64; N]| {
        ((0..N).map(|i| (v[i] / scale(i, y)).powi(2)).sum::<f64>() / N as f64).sqrt()
    };
    let d0 = norm(y0, y0);
    let d1 = norm(f0, y0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = axpy(y0, dir * h0, &[(1.0, f0)]);
    let f1 = sys.rhs(t0 + dir * h0, &y1);
    stats.rhs_evals += 1;
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = norm(&diff, y0) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// Integrates from `t0` to `t_end` (either direction).
///
/// `stop` is checked after every accepted step; when it returns true the
/// solution ends there with [`Termination::Event`].
pub fn solve<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &SolverOptions,
    sampling: Sampling<'_>,
    events: &[EventFn<'_, N>],
    stop: Option<&dyn Fn(&[f64; N]) -> bool>,
) -> Solution<N> {
    let mut stats = Stats::default();
    let mut samples = vec![(t0, y0)];
    let mut hits = Vec::new();
    let span = t_end - t0;
    if span == 0.0 {
        return Solution {
            samples,
            events: hits,
            termination: Termination::Horizon,
            stats,
        };
    }
    let dir = span.signum();
    let tol = opts.tolerances;

    let mut t = t0;
    let mut y = y0;
    let mut f = sys.rhs(t, &y);
    stats.rhs_evals += 1;
    let mut h = initial_step(sys, t0, &y0, &f, dir, &tol, &mut stats)
        .min(opts.max_step)
        .min(span.abs());
    let mut next_sample = 0usize;
    let sample_times: &[f64] = match sampling {
        Sampling::Times(ts) => ts,
        _ => &[],
    };
    while next_sample < sample_times.len() && (sample_times[next_sample] - t0) * dir <= 0.0 {
        next_sample += 1;
    }
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(t, &y)).collect();
    let mut attempts = 0usize;

    let termination = loop {
        if (t_end - t) * dir <= 0.0 {
            break Termination::Horizon;
        }
        attempts += 1;
        if attempts > opts.max_steps {
            break Termination::StepFailure;
        }
        let min_step = 1e-14 * t.abs().max(1.0);
        if h < min_step {
            break Termination::StepFailure;
        }
        let mut hs = dir * h;
        let mut last = false;
        if (t + hs - t_end) * dir >= 0.0 {
            hs = t_end - t;
            last = true;
        }

        let k1 = f;
        let k2 = sys.rhs(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = sys.rhs(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = sys.rhs(
            t + C4 * hs,
            &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = sys.rhs(
            t + C5 * hs,
            &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = sys.rhs(
            t + hs,
            &axpy(
                &y,
                hs,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            hs,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let t_new = if last { t_end } else { t + hs };
        let k7 = sys.rhs(t_new, &y_new);
        stats.rhs_evals += 6;

        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = hs
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&y, &y_new, &err, &tol);
        if !en.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            stats.rejected += 1;
            h *= 0.25;
            continue;
        }
        if en > 1.0 {
            stats.rejected += 1;
            h *= (0.9 * en.powf(-0.2)).max(0.2);
            continue;
        }
        stats.accepted += 1;

        let step = HermiteStep {
            t0: t,
            t1: t_new,
            y0: y,
            y1: y_new,
            f0: k1,
            f1: k7,
        };

        // events, earliest first
        let mut terminal_at: Option<(f64, [f64; N])> = None;
        let mut step_hits: Vec<EventHit<N>> = Vec::new();
        for (idx, ev) in events.iter().enumerate() {
            let g0 = g_prev[idx];
            let g1 = (ev.g)(t_new, &y_new);
            g_prev[idx] = g1;
            if g0 == 0.0 || !(g1 == 0.0 || g0.signum() != g1.signum()) {
                continue;
            }
            let (mut a, mut b) = (t, t_new);
            let mut ga = g0;
            while (b - a).abs() > opts.event_time_tol {
                let m = 0.5 * (a + b);
                if m == a || m == b {
                    break;
                }
                let gm = (ev.g)(m, &step.eval(m));
                if gm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if gm.signum() == ga.signum() {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                }
            }
            let te = 0.5 * (a + b);
            let ye = step.eval(te);
            step_hits.push(EventHit {
                index: idx,
                t: te,
                y: ye,
            });
            if ev.terminal && terminal_at.is_none_or(|(tt, _)| (te - tt) * dir < 0.0) {
                terminal_at = Some((te, ye));
            }
        }
        step_hits.sort_by(|p, q| (p.t * dir).total_cmp(&(q.t * dir)));
        let cutoff = terminal_at.map(|(tt, _)| tt);
        for hit in step_hits {
            if cutoff.is_none_or(|c| (hit.t - c) * dir <= 0.0) {
                hits.push(hit);
            }
        }
        let end_t = cutoff.unwrap_or(t_new);

        match sampling {
            Sampling::Times(ts) => {
                while next_sample < ts.len() && (ts[next_sample] - end_t) * dir <= 0.0 {
                    let ts_i = ts[next_sample];
                    let ys = if ts_i == t_new { y_new } else { step.eval(ts_i) };
                    samples.push((ts_i, ys));
                    next_sample += 1;
                }
            }
            Sampling::Steps => {
                if cutoff.is_none() {
                    samples.push((t_new, y_new));
                }
            }
            Sampling::EndPoints => {}
        }

        if let Some((tt, yt)) = terminal_at {
            push_final(&mut samples, tt, yt, dir);
            break Termination::Event;
        }

        t = t_new;
        y = y_new;
        f = k7;

        if let Some(stop) = stop {
            if stop(&y) {
                push_final(&mut samples, t, y, dir);
                break Termination::Event;
            }
        }

        let factor = if en == 0.0 {
            5.0
        } else {
            (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * factor).min(opts.max_step);
    };

    if termination != Termination::Event {
        push_final(&mut samples, t, y, dir);
    }
    Solution {
        samples,
        events: hits,
        termination,
        stats,
    }
}

fn push_final<const N: usize>(samples: &mut Vec<(f64, [f64; N])>, t: f64, y: [f64; N], dir: f64) {
    if samples.last().is_none_or(|&(tl, _)| (t - tl) * dir > 0.0) {
        samples.push((t, y));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    struct Oscillator;
    impl OdeSystem<2> for Oscillator {
        fn rhs(&self, _t: f64, y: &[f64; 2]) -> [f64; 2] {
            [y[1], -y[0]]
        }
    }

    struct Decay;
    impl OdeSystem<1> for Decay {
        fn rhs(&self, _t: f64, y: &[f64; 1]) -> [f64; 1] {
            [-y[0]]
        }
    }

    #[test]
    fn harmonic_oscillator_full_period() {
        let sol = solve(
            &Oscillator,
            0.0,
            [1.0, 0.0],
            2.0 * PI,
            &SolverOptions::default(),
            Sampling::EndPoints,
            &[],
            None,
        );
        let (t, y) = sol.last();
        assert_eq!(sol.termination, Termination::Horizon);
        assert_eq!(t, 2.0 * PI);
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9, "{y:?}");
    }

    #[test]
    fn backward_integration() {
        let sol = solve(
            &Decay,
            1.0,
            [1.0],
            0.0,
            &SolverOptions::default(),
            Sampling::EndPoints,
            &[],
            None,
        );
        let (t, y) = sol.last();
        assert_eq!(t, 0.0);
        assert!((y[0] - 1f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn dense_samples_accurate() {
        let ts: Vec<f64> = (1..=50).map(|i| i as f64 * 0.1).collect();
        let sol = solve(
            &Oscillator,
            0.0,
            [1.0, 0.0],
            5.0,
            &SolverOptions::default(),
            Sampling::Times(&ts),
            &[],
            None,
        );
        assert_eq!(sol.samples.len(), 51);
        for &(t, y) in &sol.samples {
            assert!((y[0] - t.cos()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn events_localized_and_terminal() {
        let g = |_t: f64, y: &[f64; 2]| y[1];
        let events = [EventFn {
            g: &g,
            terminal: false,
        }];
        let sol = solve(
            &Oscillator,
            0.0,
            [0.0, 1.0],
            10.0,
            &SolverOptions::default(),
            Sampling::EndPoints,
            &events,
            None,
        );
        let times: Vec<f64> = sol.events.iter().map(|e| e.t).collect();
        assert_eq!(times.len(), 3);
        for (k, t) in times.iter().enumerate() {
            assert!((t - (PI / 2.0 + k as f64 * PI)).abs() < 1e-8, "{t}");
        }

        let term = [EventFn {
            g: &g,
            terminal: true,
        }];
        let sol = solve(
            &Oscillator,
            0.0,
            [0.0, 1.0],
            10.0,
            &SolverOptions::default(),
            Sampling::Steps,
            &term,
            None,
        );
        assert_eq!(sol.termination, Termination::Event);
        let (t, _) = sol.last();
        assert!((t - PI / 2.0).abs() < 1e-8);
        assert!(sol.samples.windows(2).all(|w| w[1].0 > w[0].0));
    }

    #[test]
    fn stop_predicate_ends_run() {
        let stop = |y: &[f64; 1]| y[0] < 0.5;
        let sol = solve(
            &Decay,
            0.0,
            [1.0],
            10.0,
            &SolverOptions::default(),
            Sampling::Steps,
            &[],
            Some(&stop),
        );
        assert_eq!(sol.termination, Termination::Event);
        assert!(sol.last().1[0] < 0.5);
    }

    struct Blowup;
    impl OdeSystem<1> for Blowup {
        fn rhs(&self, _t: f64, y: &[f64; 1]) -> [f64; 1] {
            [y[0] * y[0]]
        }
    }

    #[test]
    fn finite_time_blowup_is_step_failure() {
        let sol = solve(
            &Blowup,
            0.0,
            [1.0],
            2.0,
            &SolverOptions::default(),
            Sampling::EndPoints,
            &[],
            None,
        );
        assert_eq!(sol.termination, Termination::StepFailure);
        assert!(sol.last().0 < 1.0);
    }
}
