//! Run configuration: a TOML document with one optional section per
//! subcommand. Unknown keys are rejected.

use crate::dynamics::PhasePoint;
use crate::numeric::{linspace, QuadTolerance};
use crate::ode::Tolerances;
use crate::profiles::{CoriolisProfile, Profiles, ZonalProfile};
use crate::transport::{Mode, PhaseBox, SpatialBox};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

/// `count` evenly spaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn new(start: f64, stop: f64, count: usize) -> Self {
        Self { start, stop, count }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        linspace(self.start, self.stop, self.count)
    }

    fn validate(&self, name: &str) -> Result<(), ConfigError> {
        if self.count == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return invalid(format!("{name}: need finite bounds and count >= 1"));
        }
        Ok(())
    }
}

/// A phase point `[x1, xi1, x2, xi2]`.
pub type PointSpec = [f64; 4];

pub fn phase_point(p: &PointSpec) -> crate::Result<PhasePoint> {
    PhasePoint::new(p[0], p[1], p[2], p[3])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub zonal: ZonalProfile,
    pub coriolis: CoriolisProfile,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            zonal: ZonalProfile::Zero,
            coriolis: CoriolisProfile::Betaplane { beta: 1.0 },
        }
    }
}

impl ProfileConfig {
    pub fn profiles(&self) -> Profiles {
        Profiles::new(self.zonal, self.coriolis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        let q = QuadTolerance::default();
        Self {
            rel: q.rel,
            abs: q.abs,
            max_intervals: q.max_intervals,
        }
    }
}

impl QuadratureConfig {
    pub fn tolerance(&self) -> QuadTolerance {
        QuadTolerance {
            rel: self.rel,
            abs: self.abs,
            max_intervals: self.max_intervals,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    pub point: PointSpec,
    pub horizon: f64,
    /// Equal output intervals on `[0, horizon]`; one more row than this.
    pub intervals: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            point: [0.0, 1.0, 0.0, 1.0],
            horizon: 1000.0,
            intervals: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub points: Vec<PointSpec>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            points: vec![[0.0, 1.0, 0.0, 1.0]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub xi1: Range,
    pub x2_0: Range,
    pub xi2_0: Range,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            xi1: Range::new(1.0, 1.0, 1),
            x2_0: Range::new(-1.0, 1.0, 5),
            xi2_0: Range::new(-1.0, 1.0, 5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CritperConfig {
    pub tau: f64,
    pub xi1: f64,
    pub x2_0: f64,
}

impl Default for CritperConfig {
    fn default() -> Self {
        Self {
            tau: 0.4,
            xi1: 1.0,
            x2_0: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaSingConfig {
    pub x1: f64,
    pub xi1: f64,
    /// Start latitude; the midpoint of `(h(xi1), y2)` when absent.
    pub x2: Option<f64>,
    pub horizon: f64,
    pub intervals: usize,
}

impl Default for LambdaSingConfig {
    fn default() -> Self {
        Self {
            x1: 0.0,
            xi1: -2.0,
            x2: None,
            horizon: 1000.0,
            intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaPerConfig {
    /// Band half-width; chosen automatically when absent.
    pub eta: Option<f64>,
    pub xi1: Range,
    pub scan_cells: usize,
    pub root_width: f64,
}

impl Default for LambdaPerConfig {
    fn default() -> Self {
        Self {
            eta: None,
            xi1: Range::new(1.0, 50.0, 50),
            scan_cells: 200,
            root_width: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceConfig {
    pub tau: f64,
    pub xi1: f64,
    pub x2: Range,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            tau: 0.5,
            xi1: 1.0,
            x2: Range::new(-2.0, 2.0, 401),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigsConfig {
    pub eps: f64,
    pub n_max: u32,
}

impl Default for EigsConfig {
    fn default() -> Self {
        Self { eps: 0.1, n_max: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionConfig {
    pub eps: f64,
    pub beta: f64,
    pub xi1: Range,
    pub n: Vec<u32>,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self {
            eps: 0.1,
            beta: 1.0,
            xi1: Range::new(0.1, 5.0, 50),
            n: vec![0, 1, 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesConfig {
    /// Number of low-discrepancy points drawn from the box below.
    pub count: usize,
    pub x2: (f64, f64),
    pub xi1: (f64, f64),
    pub xi2: (f64, f64),
}

impl Default for ModesConfig {
    fn default() -> Self {
        Self {
            count: 1000,
            x2: (-3.0, 3.0),
            xi1: (0.1, 3.0),
            xi2: (-3.0, 3.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seeding {
    /// Low-discrepancy sampling of `region`.
    Box,
    /// Rossby points on the trapped betaplane circles `|k| = |xi1|`.
    TrappedCircle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    pub mode: Mode,
    pub seeding: Seeding,
    pub count: usize,
    pub region: PhaseBox,
    pub retry_budget: usize,
    pub times: Vec<f64>,
    /// Box whose mass is reported at each snapshot.
    pub mass_box: SpatialBox,
    pub abs: f64,
    pub rel: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Rossby,
            seeding: Seeding::TrappedCircle,
            count: 1000,
            region: PhaseBox {
                x1: (-0.5, 0.5),
                xi1: (1.0, 2.0),
                x2: (-0.5, 0.5),
                xi2: (-0.5, 0.5),
            },
            retry_budget: 10_000,
            times: vec![0.0, 10.0, 100.0, 1000.0],
            mass_box: SpatialBox {
                x1: (-1.0, 1.0),
                x2: (-3.0, 3.0),
            },
            abs: 1e-9,
            rel: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out: PathBuf,
    pub threads: usize,
    pub seed: u64,
    pub profiles: ProfileConfig,
    pub integrator: Tolerances,
    pub quadrature: QuadratureConfig,
    pub tol_sigma: f64,
    pub threshold: f64,
    pub trace: TraceConfig,
    pub classify: ClassifyConfig,
    pub scan: ScanConfig,
    pub critper: CritperConfig,
    pub lambda_sing: LambdaSingConfig,
    pub lambda_per: LambdaPerConfig,
    pub surface: SurfaceConfig,
    pub eigs: EigsConfig,
    pub dispersion: DispersionConfig,
    pub modes: ModesConfig,
    pub transport: TransportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("out"),
            threads: 1,
            seed: 0,
            profiles: ProfileConfig::default(),
            integrator: Tolerances::new(1e-10, 1e-10),
            quadrature: QuadratureConfig::default(),
            tol_sigma: 1e-6,
            threshold: 1e-6,
            trace: TraceConfig::default(),
            classify: ClassifyConfig::default(),
            scan: ScanConfig::default(),
            critper: CritperConfig::default(),
            lambda_sing: LambdaSingConfig::default(),
            lambda_per: LambdaPerConfig::default(),
            surface: SurfaceConfig::default(),
            eigs: EigsConfig::default(),
            dispersion: DispersionConfig::default(),
            modes: ModesConfig::default(),
            transport: TransportConfig::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be positive and finite, got {v}"))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.threads == 0 {
            return invalid("threads must be at least 1");
        }
        self.profiles
            .profiles()
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("profiles: {e}")))?;
        positive("integrator.abs", self.integrator.abs)?;
        positive("integrator.rel", self.integrator.rel)?;
        positive("quadrature.rel", self.quadrature.rel)?;
        positive("quadrature.abs", self.quadrature.abs)?;
        if self.quadrature.max_intervals == 0 {
            return invalid("quadrature.max_intervals must be at least 1");
        }
        positive("tol_sigma", self.tol_sigma)?;
        positive("threshold", self.threshold)?;
        positive("trace.horizon", self.trace.horizon)?;
        positive("lambda_sing.horizon", self.lambda_sing.horizon)?;
        positive("lambda_per.root_width", self.lambda_per.root_width)?;
        positive("eigs.eps", self.eigs.eps)?;
        positive("dispersion.eps", self.dispersion.eps)?;
        positive("transport.abs", self.transport.abs)?;
        positive("transport.rel", self.transport.rel)?;
        self.scan.xi1.validate("scan.xi1")?;
        self.scan.x2_0.validate("scan.x2_0")?;
        self.scan.xi2_0.validate("scan.xi2_0")?;
        self.lambda_per.xi1.validate("lambda_per.xi1")?;
        self.surface.x2.validate("surface.x2")?;
        self.dispersion.xi1.validate("dispersion.xi1")?;
        if self.trace.intervals == 0 || self.lambda_sing.intervals == 0 {
            return invalid("output intervals must be at least 1");
        }
        if self.transport.count == 0 {
            return invalid("transport.count must be positive");
        }
        if self.transport.times.windows(2).any(|w| w[1] < w[0])
            || self.transport.times.iter().any(|t| !(*t >= 0.0 && t.is_finite()))
        {
            return invalid("transport.times must be nonnegative and increasing");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn full_precision_survives() {
        let mut cfg = RunConfig::default();
        cfg.critper.tau = 0.1 + 0.2;
        cfg.tol_sigma = 1.234_567_890_123_456_7e-7;
        cfg.profiles.zonal = ZonalProfile::Bump {
            center: 0.0,
            halfwidth: 0.4,
            amplitude: std::f64::consts::FRAC_1_SQRT_2,
        };
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_documents_use_defaults() {
        let cfg = RunConfig::from_toml("threads = 2\n[critper]\ntau = 0.25\n").unwrap();
        assert_eq!(cfg.threads, 2);
        assert_eq!(cfg.critper.tau, 0.25);
        assert_eq!(cfg.critper.xi1, 1.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            RunConfig::from_toml("treads = 2\n"),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            RunConfig::from_toml("[profiles.coriolis]\nkind = \"betaplane\"\nbeta = 1.0\ngamma = 2.0\n"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn invariants_are_checked() {
        assert!(matches!(
            RunConfig::from_toml("threads = 0\n"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            RunConfig::from_toml("tol_sigma = -1.0\n"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            RunConfig::from_toml("[integrator]\nabs = 0.0\nrel = 1e-10\n"),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn ranges_expand() {
        assert_eq!(Range::new(0.0, 1.0, 3).values(), vec![0.0, 0.5, 1.0]);
        assert_eq!(Range::new(2.0, 5.0, 1).values(), vec![2.0]);
    }
}
