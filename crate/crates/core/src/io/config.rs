//! Per-subcommand JSON configurations. Unknown keys are rejected and every
//! file must declare the schema version it was written against.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bayes::{GridOptions, Injection, SamplingMode};
use crate::error::{Error, Result};
use crate::fisher::PsConvention;
use crate::hb::{StepSpec, DEFAULT_PHASE_POINTS, STUDY_EPSILONS};

pub const SCHEMA_VERSION: u32 = 1;

pub trait RunConfig: Serialize + DeserializeOwned + Default {
    fn schema_version(&self) -> u32;
    /// Checks value ranges that the type system does not.
    fn validate(&self) -> Result<()>;
    /// Seed stored in the file, if the command is stochastic.
    fn seed(&self) -> Option<u64> {
        None
    }
}

/// Parses and validates a configuration file's contents.
pub fn parse_config<T: RunConfig>(text: &str) -> Result<T> {
    let cfg: T = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if cfg.schema_version() != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            cfg.schema_version()
        )));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn check(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(what.to_string()))
    }
}

fn check_grid(g: &GridOptions) -> Result<()> {
    check(g.phi_half_width > 0.0, "grid.phi_half_width must be positive")?;
    check(
        0.0 <= g.v_range.0 && g.v_range.0 < g.v_range.1 && g.v_range.1 <= 1.0,
        "grid.v_range must be an increasing pair inside [0, 1]",
    )?;
    check(g.phi_points >= 16 && g.v_points >= 16, "grid needs at least 16 points per axis")
}

fn check_visibility(v: f64) -> Result<()> {
    check((0.0..=1.0).contains(&v), "v must lie in [0, 1]")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub schema_version: u32,
    pub phi: f64,
    pub v: f64,
    /// Retained coincidences (post-selected mode) or trials (full mode).
    pub m: u64,
    #[serde(default = "default_mode")]
    pub mode: SamplingMode,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_mode() -> SamplingMode {
    SamplingMode::Postselected
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            schema_version: SCHEMA_VERSION,
            phi: 0.3,
            v: 0.98,
            m: 70_000,
            mode: SamplingMode::Postselected,
            seed: None,
        }
    }
}

impl RunConfig for SimulateConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
    fn validate(&self) -> Result<()> {
        check(self.phi.is_finite(), "phi must be finite")?;
        check_visibility(self.v)?;
        if self.m == 0 {
            return Err(Error::InvalidParameter {
                name: "M",
                reason: "at least one event is required".into(),
            });
        }
        Ok(())
    }
    fn seed(&self) -> Option<u64> {
        self.seed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub schema_version: u32,
    /// Counts CSV; the `--counts` flag takes precedence.
    #[serde(default)]
    pub counts: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridOptions,
    #[serde(default)]
    pub convention: PsConvention,
    /// Calibrated visibility; adds a phase-only estimate to the report.
    #[serde(default)]
    pub v0: Option<f64>,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            schema_version: SCHEMA_VERSION,
            counts: None,
            grid: GridOptions::default(),
            convention: PsConvention::PerEvent,
            v0: None,
        }
    }
}

impl RunConfig for EstimateConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
    fn validate(&self) -> Result<()> {
        check_grid(&self.grid)?;
        if let Some(v0) = self.v0 {
            check_visibility(v0)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FisherScanConfig {
    pub schema_version: u32,
    pub v: f64,
    /// Phases `start + k (stop - start) / (points - 1)`.
    pub phi_start: f64,
    pub phi_stop: f64,
    pub points: usize,
    /// Events used to scale the bounds.
    pub m: f64,
    #[serde(default)]
    pub convention: PsConvention,
}

impl Default for FisherScanConfig {
    fn default() -> Self {
        FisherScanConfig {
            schema_version: SCHEMA_VERSION,
            v: 0.98,
            phi_start: 0.0,
            phi_stop: std::f64::consts::PI,
            points: 181,
            m: 70_000.0,
            convention: PsConvention::PerEvent,
        }
    }
}

impl RunConfig for FisherScanConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
    fn validate(&self) -> Result<()> {
        check_visibility(self.v)?;
        check(self.points >= 2, "points must be at least 2")?;
        check(
            self.phi_start.is_finite() && self.phi_stop.is_finite() && self.phi_start < self.phi_stop,
            "phi_start must be below phi_stop",
        )?;
        check(self.m > 0.0, "m must be positive")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HbScalingConfig {
    pub schema_version: u32,
    pub n: Vec<u32>,
    pub epsilon: Vec<f64>,
    #[serde(default = "default_phase_points")]
    pub phase_points: usize,
    #[serde(default)]
    pub step: StepSpec,
}

fn default_phase_points() -> usize {
    DEFAULT_PHASE_POINTS
}

impl Default for HbScalingConfig {
    fn default() -> Self {
        let mut epsilon = vec![0.0];
        epsilon.extend(STUDY_EPSILONS);
        HbScalingConfig {
            schema_version: SCHEMA_VERSION,
            n: (1..=6).collect(),
            epsilon,
            phase_points: DEFAULT_PHASE_POINTS,
            step: StepSpec::default(),
        }
    }
}

impl RunConfig for HbScalingConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
    fn validate(&self) -> Result<()> {
        check(!self.n.is_empty() && !self.epsilon.is_empty(), "n and epsilon must be non-empty")?;
        check(self.n.iter().all(|&n| (1..=16).contains(&n)), "n must lie in 1..=16")?;
        check(
            self.epsilon.iter().all(|e| (0.0..=1.0).contains(e)),
            "epsilon values must lie in [0, 1]",
        )?;
        check(self.phase_points >= 4, "phase_points must be at least 4")?;
        check(self.step.h_phi > 0.0 && self.step.h_eps > 0.0, "steps must be positive")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub schema_version: u32,
    /// Imparted phases; 20 evenly spaced values over [-0.7, 0.7] when absent.
    #[serde(default)]
    pub phases: Option<Vec<f64>>,
    pub v: f64,
    pub m: u64,
    #[serde(default = "default_injection")]
    pub injection: Injection,
    #[serde(default)]
    pub grid: GridOptions,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_injection() -> Injection {
    Injection::Sampled
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        CalibrateConfig {
            schema_version: SCHEMA_VERSION,
            phases: None,
            v: 0.98,
            m: 70_000,
            injection: Injection::Sampled,
            grid: GridOptions::default(),
            seed: None,
        }
    }
}

impl CalibrateConfig {
    pub fn phase_list(&self) -> Vec<f64> {
        self.phases.clone().unwrap_or_else(|| default_calibration_phases(20))
    }
}

/// `points` evenly spaced phases over `[-0.7, 0.7]`.
pub fn default_calibration_phases(points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| -0.7 + 1.4 * k as f64 / (points - 1) as f64)
        .collect()
}

impl RunConfig for CalibrateConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
    fn validate(&self) -> Result<()> {
        check_visibility(self.v)?;
        check_grid(&self.grid)?;
        check(self.phase_list().len() >= 3, "at least three phases")?;
        check(self.phase_list().iter().all(|p| p.is_finite()), "phases must be finite")?;
        if self.m == 0 {
            return Err(Error::InvalidParameter {
                name: "M",
                reason: "at least one event is required".into(),
            });
        }
        Ok(())
    }
    fn seed(&self) -> Option<u64> {
        self.seed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrtCalibrateConfig {
    pub schema_version: u32,
    pub phi: f64,
    pub v: f64,
    pub m: u64,
    pub repetitions: usize,
    #[serde(default)]
    pub grid: GridOptions,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for LrtCalibrateConfig {
    fn default() -> Self {
        LrtCalibrateConfig {
            schema_version: SCHEMA_VERSION,
            phi: 0.3,
            v: 0.98,
            m: 70_000,
            repetitions: 1000,
            grid: GridOptions::default(),
            seed: None,
        }
    }
}

impl RunConfig for LrtCalibrateConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
    fn validate(&self) -> Result<()> {
        check(self.phi.is_finite(), "phi must be finite")?;
        check_visibility(self.v)?;
        check_grid(&self.grid)?;
        check(self.repetitions >= 100, "repetitions must be at least 100")?;
        if self.m == 0 {
            return Err(Error::InvalidParameter {
                name: "M",
                reason: "at least one event is required".into(),
            });
        }
        Ok(())
    }
    fn seed(&self) -> Option<u64> {
        self.seed
    }
}
