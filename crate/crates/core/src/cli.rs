//! Command-line front end. Every subcommand computes its outputs in memory,
//! then writes them to temporary files in the output directory and renames
//! them into place only once all of them succeeded.

use crate::classify::{asymptotic_rates, classify, ClassifyOptions};
use crate::config::{phase_point, ConfigError, RunConfig, Seeding};
use crate::dynamics::{energy, integrate, IntegrateOptions, SampleSpec, Trajectory};
use crate::error::Error;
use crate::modes::{polarization_matrices, polarization_residuals};
use crate::numeric::halton;
use crate::ode::Tolerances;
use crate::reduced::{bracket, energy_surface_points, period, BracketOptions};
use crate::spectral::{bohr_sommerfeld, dispersion_roots};
use crate::transport::{
    mass_in_box, propagate_snapshots, sample_initial, trapped_circle_ensemble, Mode, SamplingSpec,
    TransportOptions,
};
use crate::trapping::{
    critper, critper_drift, drift_velocity, h_of_xi1, lambda_per_g, lambda_per_root,
    lambda_sing_point, negative_lobe, scan_lambda, LambdaPerSetup, ScanGrid, TrappingOptions,
};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error as ThisError;

#[derive(Debug, Parser)]
#[command(name = "ocean-rays", version, about = "Rossby and Poincare ray dynamics")]
pub struct Cli {
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long, global = true, env = "OCEAN_RAYS_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "OCEAN_RAYS_OUT")]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "OCEAN_RAYS_THREADS")]
    pub threads: Option<usize>,
    /// Low-discrepancy sequence offset.
    #[arg(long, global = true, env = "OCEAN_RAYS_SEED")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate one Rossby ray.
    Trace,
    /// Classify the reduced motion of the configured points.
    Classify,
    /// Classify a seed grid and compute drift velocities.
    Scan,
    /// Capture integral of one periodic band.
    Critper,
    /// Build and integrate a seed on the singular trapping set.
    LambdaSing,
    /// Sample the periodic trapping function and locate its root.
    LambdaPer,
    /// Sample an energy surface.
    Surface,
    /// Bohr-Sommerfeld eigenvalues of the Poincare operator.
    Eigs,
    /// Roots of the betaplane dispersion cubic.
    Dispersion,
    /// Check the polarization matrices on a point set.
    Modes,
    /// Propagate a particle ensemble.
    Transport,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Trace => "trace",
            Command::Classify => "classify",
            Command::Scan => "scan",
            Command::Critper => "critper",
            Command::LambdaSing => "lambda-sing",
            Command::LambdaPer => "lambda-per",
            Command::Surface => "surface",
            Command::Eigs => "eigs",
            Command::Dispersion => "dispersion",
            Command::Modes => "modes",
            Command::Transport => "transport",
        }
    }

    /// Library module whose errors this subcommand reports.
    pub fn module(&self) -> &'static str {
        match self {
            Command::Trace => "rossby_dynamics",
            Command::Classify => "classify",
            Command::Scan | Command::Critper | Command::LambdaSing | Command::LambdaPer => "trapping",
            Command::Surface => "reduced_phase",
            Command::Eigs | Command::Dispersion => "spectral_poincare",
            Command::Modes => "mode_algebra",
            Command::Transport => "transport",
        }
    }
}

#[derive(Debug, ThisError)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{module}: {source}")]
    Domain {
        module: &'static str,
        source: Error,
    },
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Domain { .. } | RunError::Io(_) => 1,
        }
    }
}

pub const TRAJECTORY_HEADER: &[&str] = &["t", "x1", "xi1", "x2", "xi2", "tau"];
pub const CLASSIFICATION_HEADER: &[&str] =
    &["x1", "xi1", "x2", "xi2", "tau", "class", "T_or_x2inf", "margin"];
pub const SCAN_HEADER: &[&str] =
    &["xi1", "x2_0", "xi2_0", "tau", "class", "margin", "drift", "trapped", "error"];
pub const SURFACE_HEADER: &[&str] = &["x2", "xi2_plus", "xi2_minus", "V"];
pub const EIGS_HEADER: &[&str] = &["n", "lambda"];
pub const DISPERSION_HEADER: &[&str] = &["xi1", "n", "tau_minus", "tau_R", "tau_plus"];
pub const ENSEMBLE_HEADER: &[&str] = &["t", "x1", "xi1", "x2", "xi2", "weight", "status"];
pub const G_HEADER: &[&str] = &["xi1", "G"];
pub const MASS_HEADER: &[&str] = &["t", "mass"];

/// Seventeen significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// One output file held in memory.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
    pub rows: Option<usize>,
    pub notes: Vec<String>,
}

impl Artifact {
    fn json(name: &str, value: &Value) -> Self {
        let mut contents = serde_json::to_vec_pretty(value).expect("json serializes");
        contents.push(b'\n');
        Self {
            name: name.into(),
            contents,
            rows: None,
            notes: Vec::new(),
        }
    }

    fn with_note(mut self, note: &str) -> Self {
        self.notes.push(note.into());
        self
    }
}

struct Table {
    name: String,
    writer: csv::Writer<Vec<u8>>,
    rows: usize,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self {
            name: name.into(),
            writer,
            rows: 0,
        }
    }

    fn push<I: IntoIterator<Item = String>>(&mut self, record: I) {
        self.writer
            .write_record(record.into_iter().collect::<Vec<_>>())
            .expect("in-memory write");
        self.rows += 1;
    }

    fn finish(self) -> Artifact {
        Artifact {
            name: self.name,
            contents: self.writer.into_inner().expect("in-memory flush"),
            rows: Some(self.rows),
            notes: Vec::new(),
        }
    }
}

fn trajectory_table(name: &str, traj: &Trajectory, profiles: &crate::Profiles) -> Table {
    let mut t = Table::new(name, TRAJECTORY_HEADER);
    for s in &traj.samples {
        let p = s.point;
        t.push([s.t, p.x1(), p.xi1(), p.x2(), p.xi2(), energy(&p, profiles)].map(num));
    }
    t
}

fn trapping_options(cfg: &RunConfig) -> TrappingOptions {
    TrappingOptions {
        classify: classify_options(cfg),
        tolerances: cfg.integrator,
        threshold: cfg.threshold,
    }
}

fn classify_options(cfg: &RunConfig) -> ClassifyOptions {
    ClassifyOptions {
        quadrature: cfg.quadrature.tolerance(),
        tol_sigma: cfg.tol_sigma,
        ..ClassifyOptions::default()
    }
}

fn trace(cfg: &RunConfig) -> crate::Result<Vec<Artifact>> {
    let profiles = cfg.profiles.profiles();
    let p0 = phase_point(&cfg.trace.point)?;
    let opts = IntegrateOptions::default()
        .with_tolerances(cfg.integrator)
        .with_samples(SampleSpec::Uniform {
            count: cfg.trace.intervals,
        });
    let traj = integrate(&p0, cfg.trace.horizon, &opts, &profiles)?;
    let mut a = trajectory_table("trajectory.csv", &traj, &profiles).finish();
    a.notes.push(format!("termination: {:?}", traj.termination));
    a.notes.push(format!("energy drift: {:e}", traj.energy_drift));
    Ok(vec![a])
}

fn classify_points(cfg: &RunConfig) -> crate::Result<Vec<Artifact>> {
    let profiles = cfg.profiles.profiles();
    let opts = classify_options(cfg);
    let mut t = Table::new("classification.csv", CLASSIFICATION_HEADER);
    let mut reports = Vec::new();
    for spec in &cfg.classify.points {
        let p = phase_point(spec)?;
        let c = classify(&p, &profiles, &opts)?;
        t.push([
            num(p.x1()),
            num(p.xi1()),
            num(p.x2()),
            num(p.xi2()),
            num(c.tau),
            c.class.label().to_string(),
            opt_num(c.class.period_or_limit()),
            num(c.margin.min()),
        ]);
        reports.push(json!({
            "point": spec,
            "tau": c.tau,
            "class": c.class,
            "margin": c.margin,
            "band": c.report.map(|r| json!({
                "xmin": r.xmin,
                "xmax": r.xmax,
                "lower": format!("{:?}", r.lower),
                "upper": format!("{:?}", r.upper),
            })),
        }));
    }
    Ok(vec![
        t.finish(),
        Artifact::json("classification.json", &Value::Array(reports)),
    ])
}

fn scan(cfg: &RunConfig) -> crate::Result<Vec<Artifact>> {
    let profiles = cfg.profiles.profiles();
    let grid = ScanGrid {
        xi1: cfg.scan.xi1.values(),
        x2_0: cfg.scan.x2_0.values(),
        xi2_0: cfg.scan.xi2_0.values(),
    };
    let rows = scan_lambda(&grid, &profiles, &trapping_options(cfg));
    let mut t = Table::new("scan.csv", SCAN_HEADER);
    for r in rows {
        t.push([
            num(r.xi1),
            num(r.x2_0),
            num(r.xi2_0),
            opt_num(r.tau),
            r.class.map(|c| c.label().to_string()).unwrap_or_default(),
            opt_num(r.margin),
            opt_num(r.drift),
            r.trapped.map(|b| b.to_string()).unwrap_or_default(),
            r.error.unwrap_or_default(),
        ]);
    }
    Ok(vec![t.finish()])
}

fn critper_report(cfg: &RunConfig) -> crate::Result<Vec<Artifact>> {
    let profiles = cfg.profiles.profiles();
    let c = &cfg.critper;
    let tol = cfg.quadrature.tolerance();
    let report = bracket(c.tau, c.xi1, c.x2_0, &profiles, &BracketOptions::default())?;
    if !report.is_periodic() {
        return Err(Error::NotPeriodic(format!(
            "band [{}, {}] ends in {:?} and {:?}",
            report.xmin, report.xmax, report.lower, report.upper
        )));
    }
    let t = period(&report, tol)?;
    let value = critper(&report, tol)?;
    let drift = critper_drift(&report, t, tol)?;
    Ok(vec![Artifact::json(
        "critper.json",
        &json!({
            "tau": c.tau,
            "xi1": c.xi1,
            "x2_0": c.x2_0,
            "xmin": report.xmin,
            "xmax": report.xmax,
            "period": t,
            "critper": value,
            "drift": drift,
            "trapped": drift.abs() < cfg.threshold,
        }),
    )])
}

fn lambda_sing(cfg: &RunConfig) -> crate::Result<Vec<Artifact>> {
    let profiles = cfg.profiles.profiles();
    let c = &cfg.lambda_sing;
    let lobe = negative_lobe(&profiles)?;
    let h = h_of_xi1(c.xi1, &lobe, &profiles)?;
    let x2 = c.x2.unwrap_or(0.5 * (h + lobe.y2));
    let p0 = lambda_sing_point(c.x1, c.xi1, x2, &lobe, &profiles)?;
    let opts = IntegrateOptions::default()
        .with_tolerances(cfg.integrator)
        .with_samples(SampleSpec::Uniform { count: c.intervals });
    let traj = integrate(&p0, c.horizon, &opts, &profiles)?;
    let x1: Vec<f64> = traj.samples.iter().map(|s| s.point.x1()).collect();
    let x2s: Vec<f64> = traj.samples.iter().map(|s| s.point.x2()).collect();
    let rates = asymptotic_rates(&traj, lobe.y2);
    let report = json!({
        "lobe": {"y1": lobe.y1, "y2": lobe.y2, "n": lobe.n},
        "h": h,
        "seed": p0.as_array(),
        "tau": energy(&p0, &profiles),
        "x2_monotone": x2s.windows(2).all(|w| w[1] >= w[0]),
        "x1_range": [
            x1.iter().copied().fold(f64::INFINITY, f64::min),
            x1.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ],
        "termination": format!("{:?}", traj.termination),
        "rates": rates.as_ref().ok().map(|r| json!({
            "c1": r.c1,
            "c2": r.c2,
            "exponent": r.exponent,
            "r_squared": r.r_squared,
            "consistency": r.consistency(lobe.y2, &profiles),
        })),
        "rates_error": rates.as_ref().err().map(|e| e.to_string()),
    });
    Ok(vec![
        trajectory_table("lambda_sing.csv", &traj, &profiles).finish(),
        Artifact::json("lambda_sing.json", &report),
    ])
}

fn lambda_per(cfg: &RunConfig) -> crate::Result<Vec<Artifact>> {
    let profiles = cfg.profiles.profiles();
    let c = &cfg.lambda_per;
    let tol = cfg.quadrature.tolerance();
    let mut setup = match c.eta {
        Some(eta) => LambdaPerSetup::with_eta(eta, &profiles)?,
        None => LambdaPerSetup::auto(&profiles)?,
    };
    let xs = c.xi1.values();
    setup.xi1_range = (xs[0], xs[xs.len() - 1]);
    let mut t = Table::new("g_samples.csv", G_HEADER);
    for &x in &xs {
        t.push([num(x), num(lambda_per_g(x, &setup, &profiles, tol)?)]);
    }
    let root = lambda_per_root(&setup, &profiles, c.scan_cells, c.root_width, tol)?;
    let seed = setup.seed(root.xi1, &profiles)?;
    let verdict = drift_velocity(&seed, &profiles, &trapping_options(cfg))?;
    let report = json!({
        "eta": setup.eta,
        "delta": setup.delta,
        "root": root.xi1,
        "bracket": [root.bracket.0, root.bracket.1],
        "slope": root.slope,
        "seed": seed.as_array(),
        "drift": verdict.drift,
        "trapped": verdict.trapped,
    });
    Ok(vec![t.finish(), Artifact::json("lambda_per.json", &report)])
}

fn surface(cfg: &RunConfig) -> crate::Result<Vec<Artifact>> {
    let profiles = cfg.profiles.profiles();
    let c = &cfg.surface;
    if c.xi1 == 0.0 {
        return Err(Error::InvalidArgument("surface.xi1 must be nonzero".into()));
    }
    let mut t = Table::new("surface.csv", SURFACE_HEADER);
    for p in energy_surface_points(c.tau, c.xi1, &c.x2.values(), &profiles) {
        t.push([p.x2, p.xi2_plus, p.xi2_minus, p.v].map(num));
    }
    Ok(vec![t.finish()])
}

fn eigs(cfg: &RunConfig) -> crate::Result<Vec<Artifact>> {
    let b = cfg.profiles.coriolis;
    let tol = cfg.quadrature.tolerance();
    let mut t = Table::new("eigs.csv", EIGS_HEADER);
    for n in 0..=cfg.eigs.n_max {
        t.push([n.to_string(), num(bohr_sommerfeld(n, cfg.eigs.eps, &b, tol)?)]);
    }
    Ok(vec![t.finish()])
}

fn dispersion(cfg: &RunConfig) -> crate::Result<Vec<Artifact>> {
    let c = &cfg.dispersion;
    let mut t = Table::new("dispersion.csv", DISPERSION_HEADER);
    for xi1 in c.xi1.values() {
        for &n in &c.n {
            let r = dispersion_roots(xi1, n, c.eps, c.beta)?;
            t.push([
                num(xi1),
                n.to_string(),
                num(r.tau_minus),
                num(r.tau_r),
                num(r.tau_plus),
            ]);
        }
    }
    Ok(vec![t.finish()])
}

fn modes(cfg: &RunConfig) -> crate::Result<Vec<Artifact>> {
    let c = &cfg.modes;
    let b = cfg.profiles.coriolis;
    let lerp = |(lo, hi): (f64, f64), u: f64| lo + (hi - lo) * u;
    let mut worst_identity = 0.0f64;
    let mut worst_det = 0.0f64;
    let mut min_det = f64::INFINITY;
    let mut worst_residual = 0.0f64;
    for i in 0..c.count as u64 {
        let u = halton(cfg.seed + i + 1, 3);
        let m = polarization_matrices(lerp(c.x2, u[0]), lerp(c.xi1, u[1]), lerp(c.xi2, u[2]), &b)?;
        let det = m.det_p0().norm();
        let formula = m.det_formula();
        worst_identity = worst_identity.max(m.identity_defect());
        worst_det = worst_det.max((det - formula).abs() / formula);
        min_det = min_det.min(det);
        worst_residual = polarization_residuals(&m).iter().fold(worst_residual, |a, r| a.max(*r));
    }
    Ok(vec![Artifact::json(
        "modes.json",
        &json!({
            "count": c.count,
            "max_identity_defect": worst_identity,
            "max_det_relative_error": worst_det,
            "min_abs_det": min_det,
            "max_eigen_residual": worst_residual,
        }),
    )])
}

fn transport(cfg: &RunConfig) -> crate::Result<Vec<Artifact>> {
    let profiles = cfg.profiles.profiles();
    let c = &cfg.transport;
    let e0 = match c.seeding {
        Seeding::TrappedCircle => {
            if c.mode != Mode::Rossby {
                return Err(Error::InvalidArgument(
                    "trapped_circle seeding is only defined for the rossby mode".into(),
                ));
            }
            trapped_circle_ensemble(c.count, c.region.x1, c.region.xi1, cfg.seed, &profiles)?
        }
        Seeding::Box => sample_initial(
            &SamplingSpec {
                region: c.region,
                count: c.count,
                mode: c.mode,
                seed: cfg.seed,
                tol_sigma: cfg.tol_sigma,
                retry_budget: c.retry_budget,
            },
            &profiles,
        )?,
    };
    let opts = TransportOptions {
        tolerances: Tolerances::new(c.abs, c.rel),
    };
    let snaps = propagate_snapshots(&e0, &c.times, &profiles, &opts)?;
    let mut ens = Table::new("ensemble.csv", ENSEMBLE_HEADER);
    let mut mass = Table::new("mass.csv", MASS_HEADER);
    for s in &snaps {
        for p in &s.particles {
            let q = p.point;
            ens.push([
                num(s.time),
                num(q.x1()),
                num(q.xi1()),
                num(q.x2()),
                num(q.xi2()),
                num(p.weight),
                p.status.label().to_string(),
            ]);
        }
        mass.push([num(s.time), num(mass_in_box(s, &c.mass_box))]);
    }
    let mut out = vec![ens.finish(), mass.finish()];
    if c.mode != Mode::Rossby {
        let note = "poincare rays follow the classical flow of tau_+-; this is a heuristic \
                    illustration, the spectral group-speed bound is the rigorous check, and \
                    escape times do not map onto the 1/eps^2 scale";
        out = out.into_iter().map(|a| a.with_note(note)).collect();
    }
    Ok(out)
}

/// Computes the outputs of one subcommand without touching the filesystem.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Vec<Artifact>, RunError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| ConfigError::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| match command {
        Command::Trace => trace(cfg),
        Command::Classify => classify_points(cfg),
        Command::Scan => scan(cfg),
        Command::Critper => critper_report(cfg),
        Command::LambdaSing => lambda_sing(cfg),
        Command::LambdaPer => lambda_per(cfg),
        Command::Surface => surface(cfg),
        Command::Eigs => eigs(cfg),
        Command::Dispersion => dispersion(cfg),
        Command::Modes => modes(cfg),
        Command::Transport => transport(cfg),
    })
    .map_err(|source| RunError::Domain {
        module: command.module(),
        source,
    })
}

#[derive(Serialize)]
struct Meta<'a> {
    command: &'a str,
    file: &'a str,
    rows: Option<usize>,
    config: &'a RunConfig,
    versions: Value,
    wall_time_seconds: f64,
    notes: &'a [String],
}

fn sidecar(command: Command, cfg: &RunConfig, a: &Artifact, wall: f64) -> Vec<u8> {
    let meta = Meta {
        command: command.name(),
        file: &a.name,
        rows: a.rows,
        config: cfg,
        versions: json!({ env!("CARGO_PKG_NAME"): env!("CARGO_PKG_VERSION") }),
        wall_time_seconds: wall,
        notes: &a.notes,
    };
    let mut v = serde_json::to_vec_pretty(&meta).expect("meta serializes");
    v.push(b'\n');
    v
}

/// Writes every artifact and its `.meta.json` sidecar into `dir`. Nothing
/// is renamed into place unless all files were written.
pub fn write_artifacts(
    dir: &Path,
    command: Command,
    cfg: &RunConfig,
    artifacts: &[Artifact],
    wall: f64,
) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut staged = Vec::new();
    for a in artifacts {
        for (name, bytes) in [
            (a.name.clone(), a.contents.clone()),
            (format!("{}.meta.json", a.name), sidecar(command, cfg, a, wall)),
        ] {
            let mut f = tempfile::NamedTempFile::new_in(dir)?;
            f.write_all(&bytes)?;
            f.as_file().sync_all()?;
            staged.push((f, dir.join(name)));
        }
    }
    let mut written = Vec::with_capacity(staged.len());
    for (f, path) in staged {
        f.persist(&path).map_err(|e| e.error)?;
        written.push(path);
    }
    Ok(written)
}

/// Runs one subcommand and writes its outputs to `cfg.out`.
pub fn run(command: Command, cfg: &RunConfig) -> Result<Vec<PathBuf>, RunError> {
    let start = Instant::now();
    let artifacts = execute(command, cfg)?;
    let wall = start.elapsed().as_secs_f64();
    Ok(write_artifacts(&cfg.out, command, cfg, &artifacts, wall)?)
}

/// Loads the configuration named by the flags and applies flag overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses arguments, runs, and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = resolve_config(&cli)
        .map_err(RunError::from)
        .and_then(|cfg| run(cli.command, &cfg));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
