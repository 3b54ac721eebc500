//! Fisher information of the two-photon strategies, Cramér-Rao bounds and
//! the likelihood-ratio test of a covariance against its bound.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bayes::{estimate_joint, sample_counts_stream, GridOptions, SamplingMode};
use crate::error::{Error, Result};
use crate::matrix::Sym2;
use crate::noon::{fringe, ModelPoint};

/// Probabilities below this are treated as exact zeros.
const ZERO_PROB: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherFlavor {
    Full,
    Postselected,
    HbNumerical,
}

/// Parameter pair a matrix refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Params {
    PhiV,
    PhiEpsilon,
}

impl Params {
    pub fn labels(&self) -> [&'static str; 2] {
        match self {
            Params::PhiV => ["phi", "v"],
            Params::PhiEpsilon => ["phi", "epsilon"],
        }
    }
}

/// Normalization of the post-selected information.
///
/// `PerEvent` is the information per retained coincidence, the one that
/// pairs with `M = sum n_theta` in the bound. `SettingAveraged` carries an
/// extra factor 1/4 for the uniformly drawn setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsConvention {
    #[default]
    PerEvent,
    SettingAveraged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix2 {
    /// `(F_11, F_22, F_12)` in the order given by `params`.
    pub entries: Sym2,
    pub params: Params,
    pub flavor: FisherFlavor,
    /// Evaluation point `(phi, v)` or `(phi, epsilon)`.
    pub point: (f64, f64),
    /// Set when a probability vanished with a non-vanishing derivative; the
    /// affected entries are infinite.
    pub divergent: bool,
}

impl FisherMatrix2 {
    pub fn xi(&self) -> f64 {
        self.entries.correlation()
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.entries.eigenvalues()[0] >= -tol
    }
}

struct Accum {
    m: Sym2,
    divergent: bool,
}

impl Accum {
    fn new() -> Self {
        Accum {
            m: Sym2::ZERO,
            divergent: false,
        }
    }

    /// Adds `w g g^T / p`.
    fn push(&mut self, w: f64, p: f64, g: (f64, f64)) {
        if p > ZERO_PROB {
            self.m.xx += w * g.0 * g.0 / p;
            self.m.yy += w * g.1 * g.1 / p;
            self.m.xy += w * g.0 * g.1 / p;
        } else if g.1.abs() > 0.0 {
            self.m.yy = f64::INFINITY;
            self.m.xy = f64::INFINITY;
            self.divergent = true;
        }
    }
}

/// Information of the coincidence-only data over `settings`.
///
/// At `v = 1` a dark setting makes `p = 0`; its phase term tends to the finite
/// limit `2 sin^2(4 theta - phi)` while the visibility terms diverge.
pub fn fisher_postselected(point: ModelPoint, settings: &[f64], convention: PsConvention) -> FisherMatrix2 {
    let v = point.v;
    let mut acc = Accum::new();
    for &theta in settings {
        let c = fringe(theta, point.phi);
        let s = (8.0 * theta - 2.0 * point.phi).sin();
        let p = 0.25 * (1.0 + v * c);
        let g = (0.5 * v * s, 0.25 * c);
        if p > ZERO_PROB {
            acc.push(1.0, p, g);
        } else {
            acc.m.xx += 2.0 * v * v * (4.0 * theta - point.phi).sin().powi(2);
            acc.push(1.0, p, g);
        }
    }
    let scale = match convention {
        PsConvention::PerEvent => 1.0,
        PsConvention::SettingAveraged => 0.25,
    };
    FisherMatrix2 {
        entries: acc.m.scale(scale),
        params: Params::PhiV,
        flavor: FisherFlavor::Postselected,
        point: (point.phi, point.v),
        divergent: acc.divergent,
    }
}

/// Information per trial of the full three-outcome measurement, with each
/// setting drawn with probability `1 / settings.len()`.
///
/// The bunched terms are simplified analytically so their quadratic zeros
/// cancel; only the coincidence term can diverge (at `v = 1`).
pub fn fisher_full(point: ModelPoint, settings: &[f64]) -> FisherMatrix2 {
    let v = point.v;
    let w = 1.0 / settings.len() as f64;
    let one_v = 1.0 + v;
    let mut acc = Accum::new();
    for &theta in settings {
        let c = fringe(theta, point.phi);
        let s = (8.0 * theta - 2.0 * point.phi).sin();
        let p1 = (1.0 + v * c) / one_v;
        let g1 = (2.0 * v * s / one_v, (c - 1.0) / (one_v * one_v));
        if p1 > ZERO_PROB {
            acc.push(w, p1, g1);
        } else {
            // dark coincidence at v = 1: the phase term tends to 4 sin^2(4 theta - phi)
            let y = 4.0 * theta - point.phi;
            acc.m.xx += w * 8.0 * v * y.sin().powi(2) / one_v;
            acc.push(w, p1, g1);
        }

        // p2 = K sin^2 y, K = v/(1+v); dphi p2 = -2K sin y cos y, dv p2 = sin^2 y/(1+v)^2.
        // Two bunched outcomes share p2.
        let y = 4.0 * theta - point.phi;
        let (sy, cy) = y.sin_cos();
        let k = v / one_v;
        let kv = 1.0 / (one_v * one_v);
        if k > 0.0 {
            acc.m.xx += w * 2.0 * 4.0 * k * cy * cy;
            acc.m.yy += w * 2.0 * kv * kv * sy * sy / k;
            acc.m.xy += w * 2.0 * (-2.0 * kv * sy * cy);
        }
    }
    FisherMatrix2 {
        entries: acc.m,
        params: Params::PhiV,
        flavor: FisherFlavor::Full,
        point: (point.phi, point.v),
        divergent: acc.divergent,
    }
}

/// Probability that a trial of the full scheme yields a coincidence.
pub fn success_probability(point: ModelPoint, settings: &[f64]) -> f64 {
    let v = point.v;
    settings
        .iter()
        .map(|&t| (1.0 + v * fringe(t, point.phi)) / (1.0 + v))
        .sum::<f64>()
        / settings.len() as f64
}

/// Post-selected per-event information scaled by the success probability,
/// i.e. the information per trial that survives post-selection.
pub fn weighted_postselected(point: ModelPoint, settings: &[f64]) -> FisherMatrix2 {
    let mut f = fisher_postselected(point, settings, PsConvention::PerEvent);
    f.entries = f.entries.scale(success_probability(point, settings));
    f
}

/// Phase-only information when the visibility is pinned to `v0`.
pub fn fisher_single_param(phi: f64, v0: f64, settings: &[f64]) -> f64 {
    fisher_postselected(ModelPoint { phi, v: v0 }, settings, PsConvention::PerEvent)
        .entries
        .xx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbReport {
    /// `F^{-1} / M`.
    pub bound: Sym2,
    pub m: f64,
    pub xi: f64,
}

impl CrbReport {
    pub fn delta2_first(&self) -> f64 {
        self.bound.xx
    }

    pub fn delta2_second(&self) -> f64 {
        self.bound.yy
    }

    pub fn covariance(&self) -> f64 {
        self.bound.xy
    }
}

const MAX_CONDITION: f64 = 1e12;

pub fn crb(f: &FisherMatrix2, m: f64) -> Result<CrbReport> {
    if m.is_nan() || m <= 0.0 {
        return Err(Error::invalid("M", "number of events must be positive"));
    }
    let e = f.entries;
    let singular = || {
        let [first, second] = f.params.labels();
        // the parameter with the weaker diagonal is the one left undetermined
        let parameter = if e.xx <= e.yy { first } else { second };
        Error::SingularFisher { parameter }
    };
    if f.divergent || !e.det().is_finite() || e.condition_number() >= MAX_CONDITION {
        return Err(singular());
    }
    let inv = e.inverse().ok_or_else(singular)?;
    Ok(CrbReport {
        bound: inv.scale(1.0 / m),
        m,
        xi: f.xi(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrtForm {
    /// `M^2 Tr(F Sigma) - M (ln det Sigma + ln det(M F)) - 2`, as published.
    #[default]
    Verbatim,
    /// `M [Tr(M F Sigma) - ln det(M F Sigma) - 2]`, the usual covariance test.
    Standard,
}

/// 95% quantile of chi-square with three degrees of freedom.
pub const LRT_CRITICAL_95: f64 = 7.81;
pub const LRT_DOF: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrtResult {
    pub statistic: f64,
    pub form: LrtForm,
    pub dof: u32,
    pub critical: f64,
    pub compatible: bool,
}

pub fn lrt_statistic(f: &Sym2, sigma: &Sym2, m: f64, form: LrtForm) -> Result<LrtResult> {
    if !sigma.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let mf = f.scale(m);
    if !mf.is_positive_definite() {
        return Err(Error::invalid("F", "Fisher matrix must be positive definite"));
    }
    let trace = f.trace_product(sigma);
    let statistic = match form {
        LrtForm::Verbatim => m * m * trace - m * (sigma.det().ln() + mf.det().ln()) - 2.0,
        LrtForm::Standard => m * (m * trace - (sigma.det() * mf.det()).ln() - 2.0),
    };
    Ok(LrtResult {
        statistic,
        form,
        dof: LRT_DOF,
        critical: LRT_CRITICAL_95,
        compatible: statistic <= LRT_CRITICAL_95,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub level: f64,
    pub verbatim: f64,
    pub standard: f64,
    pub chi2_3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtCalibration {
    pub point: ModelPoint,
    pub m: u64,
    pub repetitions: usize,
    pub seed: u64,
    pub verbatim: Vec<f64>,
    pub standard: Vec<f64>,
    pub quantiles: Vec<QuantileRow>,
    /// Share of runs with the standard statistic above 7.81.
    pub standard_rejection_rate: f64,
}

impl LrtCalibration {
    pub fn quantile(&self, level: f64) -> Option<&QuantileRow> {
        self.quantiles.iter().find(|q| (q.level - level).abs() < 1e-12)
    }
}

pub const CALIBRATION_LEVELS: [f64; 5] = [0.5, 0.9, 0.95, 0.99, 0.999];

fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    // linear interpolation between order statistics
    let pos = level * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Distribution of the test statistic when the data do come from `point`:
/// simulate, estimate the covariance on the grid, evaluate both forms.
pub fn lrt_null_calibration(
    point: ModelPoint,
    m: u64,
    repetitions: usize,
    seed: u64,
    grid: &GridOptions,
) -> Result<LrtCalibration> {
    use rayon::prelude::*;

    if m == 0 {
        return Err(Error::invalid("M", "at least one event is required"));
    }
    if repetitions < 100 {
        return Err(Error::invalid("repetitions", "at least 100 repetitions"));
    }
    let settings = crate::noon::CANONICAL_SETTINGS;
    let f = fisher_postselected(point, &settings, PsConvention::PerEvent).entries;
    let runs: Vec<(f64, f64)> = (0..repetitions)
        .into_par_iter()
        .map(|k| {
            let counts = sample_counts_stream(point, m, seed, k as u64, SamplingMode::Postselected)?;
            let (_, est) = estimate_joint(&counts, grid)?;
            let mm = est.m as f64;
            Ok((
                lrt_statistic(&f, &est.cov, mm, LrtForm::Verbatim)?.statistic,
                lrt_statistic(&f, &est.cov, mm, LrtForm::Standard)?.statistic,
            ))
        })
        .collect::<Result<_>>()?;
    let verbatim: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let standard: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let mut sv = verbatim.clone();
    let mut ss = standard.clone();
    sv.sort_by(f64::total_cmp);
    ss.sort_by(f64::total_cmp);
    let chi = ChiSquared::new(LRT_DOF as f64).expect("positive dof");
    let quantiles = CALIBRATION_LEVELS
        .iter()
        .map(|&level| QuantileRow {
            level,
            verbatim: empirical_quantile(&sv, level),
            standard: empirical_quantile(&ss, level),
            chi2_3: chi.inverse_cdf(level),
        })
        .collect();
    let rejected = standard.iter().filter(|&&l| l > LRT_CRITICAL_95).count();
    Ok(LrtCalibration {
        point,
        m,
        repetitions,
        seed,
        verbatim,
        standard,
        quantiles,
        standard_rejection_rate: rejected as f64 / repetitions as f64,
    })
}
