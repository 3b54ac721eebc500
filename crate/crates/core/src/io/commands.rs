//! The six experiment commands. Each reads a validated configuration, writes
//! its primary outputs into the output directory and returns the file list;
//! [`run`] wraps them with config digests and a manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bayes::{
    calibration_sweep, estimate_joint, estimate_single_param, sample_counts, CountRecord, EstimateSummary, PhiPrior,
    SingleParamEstimate,
};
use crate::error::{Error, Result};
use crate::fisher::{
    crb, fisher_full, fisher_postselected, lrt_null_calibration, lrt_statistic, weighted_postselected, CrbReport,
    FisherMatrix2, LrtForm, LrtResult, QuantileRow, LRT_CRITICAL_95,
};
use crate::hb::{optimize_phase, phase_grid, scaling_sweep, Target};
use crate::io::config::*;
use crate::io::counts::{parse_counts_csv, write_counts_csv};
use crate::noon::{ModelPoint, CANONICAL_SETTINGS};

pub const TOOL_NAME: &str = "noonmetry";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Simulate,
    Estimate,
    FisherScan,
    HbScaling,
    Calibrate,
    LrtCalibrate,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Estimate => "estimate",
            Subcommand::FisherScan => "fisher-scan",
            Subcommand::HbScaling => "hb-scaling",
            Subcommand::Calibrate => "calibrate",
            Subcommand::LrtCalibrate => "lrt-calibrate",
        }
    }
}

/// Everything a command needs, as collected from the command line.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub subcommand: Subcommand,
    /// Contents of the configuration file; defaults are used when absent.
    pub config: Option<String>,
    /// Overrides the seed stored in the configuration.
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    /// Counts file for `estimate`; overrides the configuration's path.
    pub counts: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Sidecar written next to the outputs of every run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config_sha256: String,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<OutputFile>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn now_unix() -> u64 {
    // honour SOURCE_DATE_EPOCH so manifests can be made reproducible too
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok()) {
        return t;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Digest identifying a run: subcommand, effective configuration and seed.
pub fn config_digest<T: Serialize>(subcommand: Subcommand, cfg: &T, seed: u64) -> Result<String> {
    let canonical = serde_json::json!({
        "subcommand": subcommand.name(),
        "config": cfg,
        "seed": seed,
    });
    Ok(sha256_hex(&serde_json::to_vec(&canonical)?))
}

fn load<T: RunConfig>(text: Option<&str>) -> Result<T> {
    match text {
        Some(t) => parse_config(t),
        None => {
            let cfg = T::default();
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

struct Ctx<'a> {
    out_dir: &'a Path,
    digest: String,
    seed: u64,
    written: Vec<PathBuf>,
}

impl Ctx<'_> {
    fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents)?;
        self.written.push(path);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn csv_preamble(&self, subcommand: Subcommand) -> String {
        format!(
            "# tool: {TOOL_NAME} {TOOL_VERSION}\n# subcommand: {}\n# config_sha256: {}\n# seed: {}\n",
            subcommand.name(),
            self.digest,
            self.seed
        )
    }
}

/// Runs one command and writes its outputs plus `manifest.json` into `out_dir`.
pub fn run(inv: &Invocation) -> Result<RunManifest> {
    let started = now_unix();
    let text = inv.config.as_deref();
    fs::create_dir_all(&inv.out_dir)?;
    let mut ctx = Ctx {
        out_dir: &inv.out_dir,
        digest: String::new(),
        seed: 0,
        written: Vec::new(),
    };
    match inv.subcommand {
        Subcommand::Simulate => {
            let cfg: SimulateConfig = load(text)?;
            prepare(&mut ctx, inv, &cfg)?;
            cmd_simulate(&cfg, &mut ctx)?;
        }
        Subcommand::Estimate => {
            let cfg: EstimateConfig = load(text)?;
            prepare(&mut ctx, inv, &cfg)?;
            let path = inv
                .counts
                .clone()
                .or_else(|| cfg.counts.clone())
                .ok_or_else(|| Error::Config("no counts file given (use --counts or `counts`)".into()))?;
            let counts = parse_counts_csv(&fs::read_to_string(&path)?)?;
            cmd_estimate(&cfg, &counts, &mut ctx)?;
        }
        Subcommand::FisherScan => {
            let cfg: FisherScanConfig = load(text)?;
            prepare(&mut ctx, inv, &cfg)?;
            cmd_fisher_scan(&cfg, &mut ctx)?;
        }
        Subcommand::HbScaling => {
            let cfg: HbScalingConfig = load(text)?;
            prepare(&mut ctx, inv, &cfg)?;
            cmd_hb_scaling(&cfg, &mut ctx)?;
        }
        Subcommand::Calibrate => {
            let cfg: CalibrateConfig = load(text)?;
            prepare(&mut ctx, inv, &cfg)?;
            cmd_calibrate(&cfg, &mut ctx)?;
        }
        Subcommand::LrtCalibrate => {
            let cfg: LrtCalibrateConfig = load(text)?;
            prepare(&mut ctx, inv, &cfg)?;
            cmd_lrt_calibrate(&cfg, &mut ctx)?;
        }
    }
    let mut outputs = Vec::new();
    for path in &ctx.written {
        let bytes = fs::read(path)?;
        outputs.push(OutputFile {
            file: path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
    }
    let manifest = RunManifest {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        subcommand: inv.subcommand.name().into(),
        config_sha256: ctx.digest.clone(),
        seed: ctx.seed,
        started_unix: started,
        finished_unix: now_unix(),
        outputs,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(inv.out_dir.join(MANIFEST_FILE), text)?;
    Ok(manifest)
}

fn prepare<T: RunConfig>(ctx: &mut Ctx, inv: &Invocation, cfg: &T) -> Result<()> {
    ctx.seed = inv.seed.or(cfg.seed()).unwrap_or(0);
    ctx.digest = config_digest(inv.subcommand, cfg, ctx.seed)?;
    Ok(())
}

fn units(pairs: &[(&'static str, &'static str)]) -> BTreeMap<&'static str, &'static str> {
    pairs.iter().copied().collect()
}

fn cmd_simulate(cfg: &SimulateConfig, ctx: &mut Ctx) -> Result<()> {
    let point = ModelPoint::new(cfg.phi, cfg.v)?;
    let counts = sample_counts(point, cfg.m, ctx.seed, cfg.mode)?;
    let mut text = ctx.csv_preamble(Subcommand::Simulate);
    text.push_str(&write_counts_csv(
        &counts,
        &[
            ("phi_rad", format!("{:.16e}", cfg.phi)),
            ("v", format!("{:.16e}", cfg.v)),
            ("m", cfg.m.to_string()),
        ],
    ));
    ctx.write("counts.csv", text.as_bytes())
}

#[derive(Debug, Clone, Serialize)]
pub struct LrtPair {
    pub verbatim: LrtResult,
    pub standard: LrtResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub config_sha256: String,
    pub counts_sha256: String,
    pub units: BTreeMap<&'static str, &'static str>,
    pub estimate: EstimateSummary,
    pub std_phi: f64,
    pub std_v: f64,
    /// Participation ratio of the posterior grid masses.
    pub posterior_support: f64,
    /// Post-selected information evaluated at the estimate.
    pub fisher: FisherMatrix2,
    pub crb: CrbReport,
    pub lrt: LrtPair,
    pub single_parameter: Option<SingleParamEstimate>,
}

fn cmd_estimate(cfg: &EstimateConfig, counts: &CountRecord, ctx: &mut Ctx) -> Result<()> {
    let (post, est) = estimate_joint(counts, &cfg.grid)?;
    let m = est.m as f64;
    let point = ModelPoint::new(est.phi, est.v.clamp(0.0, 1.0))?;
    let fisher = fisher_postselected(point, &counts.settings(), cfg.convention);
    let bound = crb(&fisher, m)?;
    let lrt = LrtPair {
        verbatim: lrt_statistic(&fisher.entries, &est.cov, m, LrtForm::Verbatim)?,
        standard: lrt_statistic(&fisher.entries, &est.cov, m, LrtForm::Standard)?,
    };
    let single_parameter = match cfg.v0 {
        Some(v0) => Some(estimate_single_param(
            counts,
            v0,
            PhiPrior::centered(est.phi, cfg.grid.phi_half_width, cfg.grid.phi_points),
        )?),
        None => None,
    };
    let report = EstimateReport {
        config_sha256: ctx.digest.clone(),
        counts_sha256: counts.digest(),
        units: units(&[
            ("phi", "rad"),
            ("v", "dimensionless"),
            ("cov", "rad^2, 1, rad"),
            ("fisher", "per retained event"),
            ("crb", "rad^2, 1, rad"),
        ]),
        std_phi: est.cov.xx.sqrt(),
        std_v: est.cov.yy.sqrt(),
        estimate: est,
        posterior_support: post.effective_support(),
        fisher,
        crb: bound,
        lrt,
        single_parameter,
    };
    ctx.write_json("estimate.json", &report)
}

fn fmt_or_nan(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:e}"),
        None => "nan".into(),
    }
}

fn cmd_fisher_scan(cfg: &FisherScanConfig, ctx: &mut Ctx) -> Result<()> {
    let mut out = ctx.csv_preamble(Subcommand::FisherScan);
    writeln!(out, "# v: {:e}", cfg.v).unwrap();
    writeln!(out, "# m: {:e}", cfg.m).unwrap();
    out.push_str(
        "phi_rad,ps_f_phiphi,ps_f_vv,ps_f_phiv,ps_crb_phiphi,ps_crb_vv,ps_crb_phiv,ps_xi,\
         full_f_phiphi,full_f_vv,full_f_phiv,full_crb_phiphi,full_crb_vv,full_crb_phiv,full_xi,\
         weighted_ps_f_phiphi,weighted_ps_f_vv,weighted_ps_f_phiv\n",
    );
    let step = (cfg.phi_stop - cfg.phi_start) / (cfg.points - 1) as f64;
    for k in 0..cfg.points {
        let phi = cfg.phi_start + k as f64 * step;
        let point = ModelPoint::new(phi, cfg.v)?;
        write!(out, "{phi:e}").unwrap();
        for f in [
            fisher_postselected(point, &CANONICAL_SETTINGS, cfg.convention),
            fisher_full(point, &CANONICAL_SETTINGS),
        ] {
            let e = f.entries;
            let b = crb(&f, cfg.m).ok();
            write!(
                out,
                ",{:e},{:e},{:e},{},{},{},{}",
                e.xx,
                e.yy,
                e.xy,
                fmt_or_nan(b.map(|b| b.bound.xx)),
                fmt_or_nan(b.map(|b| b.bound.yy)),
                fmt_or_nan(b.map(|b| b.bound.xy)),
                fmt_or_nan(b.map(|b| b.xi)),
            )
            .unwrap();
        }
        let w = weighted_postselected(point, &CANONICAL_SETTINGS).entries;
        writeln!(out, ",{:e},{:e},{:e}", w.xx, w.yy, w.xy).unwrap();
    }
    ctx.write("fisher_scan.csv", out.as_bytes())
}

fn cmd_hb_scaling(cfg: &HbScalingConfig, ctx: &mut Ctx) -> Result<()> {
    let grid = phase_grid(cfg.phase_points);
    let positive: Vec<f64> = cfg.epsilon.iter().copied().filter(|&e| e > 0.0).collect();
    let rows = scaling_sweep(&cfg.n, &positive, &cfg.step, &grid);
    let mut by_key = BTreeMap::new();
    for r in rows {
        by_key.insert((r.n, r.epsilon.to_bits()), r.result);
    }
    let mut out = ctx.csv_preamble(Subcommand::HbScaling);
    writeln!(out, "# phase_points: {}", cfg.phase_points).unwrap();
    out.push_str("n,epsilon,phi_opt_phi,max_eff_phi,phi_opt_eps,max_eff_eps,upsilon,phi_upsilon,unconverged,note\n");
    for &n in &cfg.n {
        for &eps in &cfg.epsilon {
            if eps == 0.0 {
                // only the phase is identifiable here
                match optimize_phase(n, 0.0, Target::Phi, &grid, &cfg.step) {
                    Ok((phi, f)) => writeln!(out, "{n},{eps:e},{phi:e},{f:e},,,,,0,phase_only").unwrap(),
                    Err(e) => writeln!(out, "{n},{eps:e},,,,,,,,{}", e.kind()).unwrap(),
                }
                continue;
            }
            match &by_key[&(n, eps.to_bits())] {
                Ok(s) => writeln!(
                    out,
                    "{n},{eps:e},{:e},{:e},{:e},{:e},{:e},{:e},{},",
                    s.phi_opt_phi, s.max_eff_phi, s.phi_opt_eps, s.max_eff_eps, s.upsilon, s.phi_upsilon, s.unconverged
                )
                .unwrap(),
                Err(e) => writeln!(out, "{n},{eps:e},,,,,,,,{}", e.replace(',', ";")).unwrap(),
            }
        }
    }
    ctx.write("hb_scaling.csv", out.as_bytes())
}

#[derive(Debug, Clone, Serialize)]
struct CalibrationReport {
    config_sha256: String,
    seed: u64,
    units: BTreeMap<&'static str, &'static str>,
    phase_slope: f64,
    phase_slope_se: f64,
    phase_offset: f64,
    visibility_slope: f64,
    visibility_slope_se: f64,
    visibility_intercept: f64,
}

fn cmd_calibrate(cfg: &CalibrateConfig, ctx: &mut Ctx) -> Result<()> {
    let res = calibration_sweep(&cfg.phase_list(), cfg.v, cfg.m, ctx.seed, &cfg.grid, cfg.injection)?;
    let mut out = ctx.csv_preamble(Subcommand::Calibrate);
    out.push_str("imparted_rad,phi_est_rad,v_est,var_phi,var_v,cov_phi_v,m\n");
    for (a, e) in res.imparted.iter().zip(&res.estimates) {
        writeln!(
            out,
            "{a:e},{:e},{:e},{:e},{:e},{:e},{}",
            e.phi, e.v, e.cov.xx, e.cov.yy, e.cov.xy, e.m
        )
        .unwrap();
    }
    ctx.write("calibration.csv", out.as_bytes())?;
    let f = res.fit;
    ctx.write_json(
        "calibration.json",
        &CalibrationReport {
            config_sha256: ctx.digest.clone(),
            seed: ctx.seed,
            units: units(&[
                ("phase_slope", "rad/rad"),
                ("phase_offset", "rad"),
                ("visibility_slope", "1/rad"),
            ]),
            phase_slope: f.phase.slope,
            phase_slope_se: f.phase.slope_se,
            phase_offset: f.phase.intercept,
            visibility_slope: f.visibility.slope,
            visibility_slope_se: f.visibility.slope_se,
            visibility_intercept: f.visibility.intercept,
        },
    )
}

#[derive(Debug, Clone, Serialize)]
struct LrtCalibrationReport {
    config_sha256: String,
    seed: u64,
    point: ModelPoint,
    m: u64,
    repetitions: usize,
    reference_critical_95: f64,
    quantiles: Vec<QuantileRow>,
    standard_rejection_rate: f64,
}

fn cmd_lrt_calibrate(cfg: &LrtCalibrateConfig, ctx: &mut Ctx) -> Result<()> {
    let point = ModelPoint::new(cfg.phi, cfg.v)?;
    let cal = lrt_null_calibration(point, cfg.m, cfg.repetitions, ctx.seed, &cfg.grid)?;
    let mut out = ctx.csv_preamble(Subcommand::LrtCalibrate);
    out.push_str("run,verbatim,standard\n");
    for (k, (a, b)) in cal.verbatim.iter().zip(&cal.standard).enumerate() {
        writeln!(out, "{k},{a:e},{b:e}").unwrap();
    }
    ctx.write("lrt_statistics.csv", out.as_bytes())?;
    ctx.write_json(
        "lrt_calibration.json",
        &LrtCalibrationReport {
            config_sha256: ctx.digest.clone(),
            seed: ctx.seed,
            point,
            m: cal.m,
            repetitions: cal.repetitions,
            reference_critical_95: LRT_CRITICAL_95,
            quantiles: cal.quantiles,
            standard_rejection_rate: cal.standard_rejection_rate,
        },
    )
}
