//! Grid-based joint Bayesian inference of phase and visibility from
//! post-selected coincidence counts, plus count simulation and the
//! calibration sweep built on top of it.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::Sym2;
use crate::noon::{fringe, probs_full, ModelPoint, CANONICAL_SETTINGS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "values")]
pub enum PriorDensity {
    Uniform,
    /// Unnormalized weights, row-major with phi as the slow index.
    Table(Vec<f64>),
}

/// Support and resolution of the prior `P_A(phi, v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub phi_range: (f64, f64),
    pub v_range: (f64, f64),
    pub phi_points: usize,
    pub v_points: usize,
    pub density: PriorDensity,
}

impl PriorSpec {
    pub const MIN_POINTS: usize = 16;

    pub fn uniform(phi_range: (f64, f64), v_range: (f64, f64), points: usize) -> Result<Self> {
        let spec = PriorSpec {
            phi_range,
            v_range,
            phi_points: points,
            v_points: points,
            density: PriorDensity::Uniform,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let (plo, phi_hi) = self.phi_range;
        let (vlo, vhi) = self.v_range;
        if !(plo.is_finite() && phi_hi.is_finite() && plo < phi_hi) {
            return Err(Error::invalid("phi_range", format!("degenerate range {:?}", self.phi_range)));
        }
        if !(0.0..=1.0).contains(&vlo) || !(0.0..=1.0).contains(&vhi) || vlo >= vhi {
            return Err(Error::invalid("v_range", format!("need 0 <= lo < hi <= 1, got {:?}", self.v_range)));
        }
        if self.phi_points < Self::MIN_POINTS || self.v_points < Self::MIN_POINTS {
            return Err(Error::invalid(
                "resolution",
                format!("at least {} points per axis", Self::MIN_POINTS),
            ));
        }
        if let PriorDensity::Table(t) = &self.density {
            if t.len() != self.phi_points * self.v_points {
                return Err(Error::invalid("density", "table size does not match the grid"));
            }
            if t.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || t.iter().all(|w| *w == 0.0) {
                return Err(Error::invalid("density", "weights must be finite, non-negative, not all zero"));
            }
        }
        Ok(())
    }

    /// Cell midpoints along phi.
    pub fn phi_nodes(&self) -> Vec<f64> {
        midpoints(self.phi_range, self.phi_points)
    }

    pub fn v_nodes(&self) -> Vec<f64> {
        midpoints(self.v_range, self.v_points)
    }

    fn log_weight(&self, idx: usize) -> f64 {
        match &self.density {
            PriorDensity::Uniform => 0.0,
            PriorDensity::Table(t) => t[idx].ln(),
        }
    }
}

fn midpoints((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    let step = (hi - lo) / n as f64;
    (0..n).map(|i| lo + (i as f64 + 0.5) * step).collect()
}

/// Coincidence counts per measurement setting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    settings: Vec<SettingKey>,
    coincidences: Vec<u64>,
    bunched: Option<Vec<[u64; 2]>>,
}

// f64 angles stored bitwise so the record can derive Eq.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
struct SettingKey(u64);

impl CountRecord {
    pub fn new(settings: Vec<f64>, coincidences: Vec<u64>, bunched: Option<Vec<[u64; 2]>>) -> Result<Self> {
        if settings.len() != coincidences.len() {
            return Err(Error::MalformedCounts(format!(
                "{} settings but {} coincidence entries",
                settings.len(),
                coincidences.len()
            )));
        }
        if let Some(b) = &bunched {
            if b.len() != settings.len() {
                return Err(Error::MalformedCounts("bunched counts do not match settings".into()));
            }
        }
        if settings.iter().any(|t| !t.is_finite()) {
            return Err(Error::MalformedCounts("non-finite setting angle".into()));
        }
        Ok(CountRecord {
            settings: settings.into_iter().map(|t| SettingKey(t.to_bits())).collect(),
            coincidences,
            bunched,
        })
    }

    pub fn settings(&self) -> Vec<f64> {
        self.settings.iter().map(|k| f64::from_bits(k.0)).collect()
    }

    pub fn coincidences(&self) -> &[u64] {
        &self.coincidences
    }

    pub fn bunched(&self) -> Option<&[[u64; 2]]> {
        self.bunched.as_deref()
    }

    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    /// Retained events `M`.
    pub fn total(&self) -> u64 {
        self.coincidences.iter().sum()
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (t, n) in self.settings.iter().zip(&self.coincidences) {
            h.update(t.0.to_le_bytes());
            h.update(n.to_le_bytes());
        }
        if let Some(b) = &self.bunched {
            for [x, y] in b {
                h.update(x.to_le_bytes());
                h.update(y.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Splits every count as `n = first + second`, with `first = floor(n * frac)`.
    pub fn split(&self, frac: f64) -> (CountRecord, CountRecord) {
        let first: Vec<u64> = self.coincidences.iter().map(|&n| (n as f64 * frac).floor() as u64).collect();
        let second = self.coincidences.iter().zip(&first).map(|(n, a)| n - a).collect();
        let mk = |c| CountRecord {
            settings: self.settings.clone(),
            coincidences: c,
            bunched: None,
        };
        (mk(first), mk(second))
    }
}

/// Probability of a retained event at setting `theta` given `(phi, v)`.
pub trait CoincidenceModel: Sync {
    fn prob(&self, theta: f64, phi: f64, v: f64) -> f64;
}

/// The post-selected four-setting model, the default likelihood.
#[derive(Debug, Clone, Copy, Default)]
pub struct PostSelected;

impl CoincidenceModel for PostSelected {
    #[inline]
    fn prob(&self, theta: f64, phi: f64, v: f64) -> f64 {
        0.25 * (1.0 + v * fringe(theta, phi))
    }
}

impl<F> CoincidenceModel for F
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    fn prob(&self, theta: f64, phi: f64, v: f64) -> f64 {
        self(theta, phi, v)
    }
}

/// Normalized posterior masses on the prior's grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorGrid {
    phi_nodes: Vec<f64>,
    v_nodes: Vec<f64>,
    masses: Vec<f64>,
    prior: PriorSpec,
    counts_digest: String,
}

/// Posterior means and covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub phi: f64,
    pub v: f64,
    /// Entries `(Delta^2 phi, Delta^2 v, Sigma_{phi,v})`.
    pub cov: Sym2,
    /// Retained events behind the estimate.
    pub m: u64,
}

impl PosteriorGrid {
    /// Wraps arbitrary non-negative masses, normalizing them.
    pub fn from_masses(phi_nodes: Vec<f64>, v_nodes: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != phi_nodes.len() * v_nodes.len() {
            return Err(Error::invalid("masses", "size does not match the node grid"));
        }
        let total: f64 = masses.iter().sum();
        if total.is_nan() || total <= 0.0 || masses.iter().any(|m| *m < 0.0 || !m.is_finite()) {
            return Err(Error::ZeroPosterior);
        }
        let prior = PriorSpec {
            phi_range: span(&phi_nodes),
            v_range: span(&v_nodes),
            phi_points: phi_nodes.len(),
            v_points: v_nodes.len(),
            density: PriorDensity::Uniform,
        };
        Ok(PosteriorGrid {
            phi_nodes,
            v_nodes,
            masses: masses.into_iter().map(|m| m / total).collect(),
            prior,
            counts_digest: String::new(),
        })
    }

    pub fn phi_nodes(&self) -> &[f64] {
        &self.phi_nodes
    }

    pub fn v_nodes(&self) -> &[f64] {
        &self.v_nodes
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, i_phi: usize, i_v: usize) -> f64 {
        self.masses[i_phi * self.v_nodes.len() + i_v]
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn counts_digest(&self) -> &str {
        &self.counts_digest
    }

    /// The posterior as a prior for a subsequent update.
    pub fn to_prior(&self) -> PriorSpec {
        PriorSpec {
            density: PriorDensity::Table(self.masses.clone()),
            ..self.prior.clone()
        }
    }

    /// Participation ratio `1 / sum(m^2)`: roughly how many nodes carry the mass.
    pub fn effective_support(&self) -> f64 {
        1.0 / self.masses.iter().map(|m| m * m).sum::<f64>()
    }

    pub fn phi_marginal(&self) -> Vec<f64> {
        self.masses.chunks(self.v_nodes.len()).map(|row| row.iter().sum()).collect()
    }

    pub fn v_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.v_nodes.len()];
        for row in self.masses.chunks(self.v_nodes.len()) {
            for (o, m) in out.iter_mut().zip(row) {
                *o += m;
            }
        }
        out
    }
}

fn span(nodes: &[f64]) -> (f64, f64) {
    match nodes {
        [] => (0.0, 0.0),
        [x] => (*x, *x),
        _ => {
            let half = 0.5 * (nodes[1] - nodes[0]);
            (nodes[0] - half, nodes[nodes.len() - 1] + half)
        }
    }
}

/// Multiplies the prior by `prod_theta p(theta|phi,v)^{n_theta}` on every node
/// and renormalizes. Accumulates in the log domain.
pub fn bayes_update<M: CoincidenceModel>(prior: &PriorSpec, counts: &CountRecord, model: &M) -> Result<PosteriorGrid> {
    prior.validate()?;
    if counts.is_empty() {
        return Err(Error::EmptyCounts);
    }
    let phi_nodes = prior.phi_nodes();
    let v_nodes = prior.v_nodes();
    let nv = v_nodes.len();
    let data: Vec<(f64, f64)> = counts
        .settings()
        .into_iter()
        .zip(counts.coincidences())
        .filter(|(_, &n)| n > 0)
        .map(|(t, &n)| (t, n as f64))
        .collect();

    let mut logs = vec![0.0; phi_nodes.len() * nv];
    logs.par_chunks_mut(nv).enumerate().for_each(|(i, row)| {
        let phi = phi_nodes[i];
        for (j, slot) in row.iter_mut().enumerate() {
            let mut acc = prior.log_weight(i * nv + j);
            if acc == f64::NEG_INFINITY {
                *slot = acc;
                continue;
            }
            for &(theta, n) in &data {
                let p = model.prob(theta, phi, v_nodes[j]);
                if p > 0.0 {
                    acc += n * p.ln();
                } else {
                    acc = f64::NEG_INFINITY;
                    break;
                }
            }
            *slot = acc;
        }
    });

    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::ZeroPosterior);
    }
    let mut total = 0.0;
    for l in logs.iter_mut() {
        *l = (*l - max).exp();
        total += *l;
    }
    logs.iter_mut().for_each(|m| *m /= total);
    Ok(PosteriorGrid {
        phi_nodes,
        v_nodes,
        masses: logs,
        prior: prior.clone(),
        counts_digest: counts.digest(),
    })
}

/// Posterior means and central second moments. Always computes, even for
/// posteriors narrower than a cell; see [`checked_moments`].
pub fn moments(post: &PosteriorGrid) -> EstimateSummary {
    let nv = post.v_nodes.len();
    let (mut phi_b, mut v_b) = (0.0, 0.0);
    for (i, row) in post.masses.chunks(nv).enumerate() {
        for (j, m) in row.iter().enumerate() {
            phi_b += m * post.phi_nodes[i];
            v_b += m * post.v_nodes[j];
        }
    }
    let (mut spp, mut svv, mut spv) = (0.0, 0.0, 0.0);
    for (i, row) in post.masses.chunks(nv).enumerate() {
        let dp = post.phi_nodes[i] - phi_b;
        for (j, m) in row.iter().enumerate() {
            let dv = post.v_nodes[j] - v_b;
            spp += m * dp * dp;
            svv += m * dv * dv;
            spv += m * dp * dv;
        }
    }
    EstimateSummary {
        phi: phi_b,
        v: v_b,
        cov: Sym2::new(spp, svv, spv),
        m: 0,
    }
}

/// [`moments`], refusing posteriors that live on fewer than four nodes.
pub fn checked_moments(post: &PosteriorGrid) -> Result<EstimateSummary> {
    let support = post.effective_support();
    if support < 4.0 {
        return Err(Error::UnderResolved {
            support: support.floor() as usize,
        });
    }
    Ok(moments(post))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// `M` retained coincidences spread over the settings.
    Postselected,
    /// `M` trials, each picking a setting uniformly and recording all three outcomes.
    Full,
}

fn multinomial(rng: &mut ChaCha8Rng, trials: u64, probs: &[f64]) -> Vec<u64> {
    let mut left = trials;
    let mut mass_left: f64 = probs.iter().sum();
    let mut out = Vec::with_capacity(probs.len());
    for (k, &p) in probs.iter().enumerate() {
        if k + 1 == probs.len() {
            out.push(left);
            break;
        }
        let q = if mass_left > 0.0 { (p / mass_left).clamp(0.0, 1.0) } else { 0.0 };
        let draw = if left == 0 || q == 0.0 {
            0
        } else {
            Binomial::new(left, q).expect("q in [0, 1]").sample(rng)
        };
        out.push(draw);
        left -= draw;
        mass_left -= p;
    }
    out
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulates one data set at `point` over the canonical settings.
pub fn sample_counts(point: ModelPoint, m: u64, seed: u64, mode: SamplingMode) -> Result<CountRecord> {
    sample_counts_stream(point, m, seed, 0, mode)
}

pub(crate) fn sample_counts_stream(point: ModelPoint, m: u64, seed: u64, stream: u64, mode: SamplingMode) -> Result<CountRecord> {
    if m == 0 {
        return Err(Error::invalid("M", "at least one event is required"));
    }
    let mut rng = rng_for(seed, stream);
    let settings = CANONICAL_SETTINGS.to_vec();
    match mode {
        SamplingMode::Postselected => {
            let probs: Vec<f64> = settings.iter().map(|&t| PostSelected.prob(t, point.phi, point.v)).collect();
            let n = multinomial(&mut rng, m, &probs);
            CountRecord::new(settings, n, None)
        }
        SamplingMode::Full => {
            let w = 1.0 / settings.len() as f64;
            let mut probs = Vec::with_capacity(3 * settings.len());
            for &t in &settings {
                let p = probs_full(t, point)?;
                probs.extend([w * p.p1, w * p.p2, w * p.p2]);
            }
            let n = multinomial(&mut rng, m, &probs);
            let coincidences = n.chunks(3).map(|c| c[0]).collect();
            let bunched = n.chunks(3).map(|c| [c[1], c[2]]).collect();
            CountRecord::new(settings, coincidences, Some(bunched))
        }
    }
}

/// Noiseless data: `M p(theta)` rounded to integers with the largest-remainder
/// rule so the total stays `M`.
pub fn expected_counts(point: ModelPoint, m: u64) -> Result<CountRecord> {
    let settings = CANONICAL_SETTINGS.to_vec();
    let exact: Vec<f64> = settings.iter().map(|&t| m as f64 * PostSelected.prob(t, point.phi, point.v)).collect();
    let mut counts: Vec<u64> = exact.iter().map(|x| x.floor() as u64).collect();
    let mut short = m - counts.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..exact.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    for &k in order.iter().cycle() {
        if short == 0 {
            break;
        }
        counts[k] += 1;
        short -= 1;
    }
    CountRecord::new(settings, counts, None)
}

/// How the joint estimation grid is placed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridOptions {
    /// Grid center along phi; a coarse maximum-likelihood search when absent.
    pub phi_center: Option<f64>,
    pub phi_half_width: f64,
    pub v_range: (f64, f64),
    pub phi_points: usize,
    pub v_points: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            phi_center: None,
            phi_half_width: 0.25,
            v_range: (0.90, 1.00),
            phi_points: 512,
            v_points: 512,
        }
    }
}

impl GridOptions {
    pub fn prior_at(&self, center: f64) -> Result<PriorSpec> {
        let spec = PriorSpec {
            phi_range: (center - self.phi_half_width, center + self.phi_half_width),
            v_range: self.v_range,
            phi_points: self.phi_points,
            v_points: self.v_points,
            density: PriorDensity::Uniform,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Phase in `(-pi/2, pi/2]` maximizing the likelihood on a coarse grid.
pub fn coarse_phase<M: CoincidenceModel>(counts: &CountRecord, model: &M, v_range: (f64, f64)) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::EmptyCounts);
    }
    let settings = counts.settings();
    let phis: Vec<f64> = (0..720).map(|k| -FRAC_PI_2 + (k as f64 + 1.0) * PI / 720.0).collect();
    let vs = midpoints(v_range, 24);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for &phi in &phis {
        for &v in &vs {
            let mut ll = 0.0;
            for (&t, &n) in settings.iter().zip(counts.coincidences()) {
                if n == 0 {
                    continue;
                }
                let p = model.prob(t, phi, v);
                ll += if p > 0.0 { n as f64 * p.ln() } else { f64::NEG_INFINITY };
            }
            if ll > best.0 {
                best = (ll, phi);
            }
        }
    }
    if best.0 == f64::NEG_INFINITY {
        return Err(Error::ZeroPosterior);
    }
    Ok(best.1)
}

/// Full pipeline: place the grid, update, take checked moments.
pub fn estimate_joint(counts: &CountRecord, opts: &GridOptions) -> Result<(PosteriorGrid, EstimateSummary)> {
    if counts.total() == 0 {
        return Err(Error::EmptyCounts);
    }
    let center = match opts.phi_center {
        Some(c) => c,
        None => coarse_phase(counts, &PostSelected, opts.v_range)?,
    };
    let prior = opts.prior_at(center)?;
    let post = bayes_update(&prior, counts, &PostSelected)?;
    let mut summary = checked_moments(&post)?;
    summary.m = counts.total();
    Ok((post, summary))
}

/// One-dimensional phase prior for the pre-calibrated visibility approach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiPrior {
    pub range: (f64, f64),
    pub points: usize,
}

impl PhiPrior {
    pub fn centered(center: f64, half_width: f64, points: usize) -> Self {
        PhiPrior {
            range: (center - half_width, center + half_width),
            points,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleParamEstimate {
    pub phi: f64,
    pub var: f64,
    pub m: u64,
}

/// Posterior over phi with the visibility frozen at `v0`.
pub fn estimate_single_param(counts: &CountRecord, v0: f64, prior: PhiPrior) -> Result<SingleParamEstimate> {
    if counts.is_empty() {
        return Err(Error::EmptyCounts);
    }
    if !(0.0..=1.0).contains(&v0) {
        return Err(Error::invalid("v0", format!("visibility {v0} outside [0, 1]")));
    }
    if prior.points < PriorSpec::MIN_POINTS || prior.range.0.partial_cmp(&prior.range.1) != Some(std::cmp::Ordering::Less) {
        return Err(Error::invalid("prior", "degenerate phase prior"));
    }
    let nodes = midpoints(prior.range, prior.points);
    let settings = counts.settings();
    let logs: Vec<f64> = nodes
        .iter()
        .map(|&phi| {
            let mut acc = 0.0;
            for (&t, &n) in settings.iter().zip(counts.coincidences()) {
                if n == 0 {
                    continue;
                }
                let p = PostSelected.prob(t, phi, v0);
                if p <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                acc += n as f64 * p.ln();
            }
            acc
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::ZeroPosterior);
    }
    let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    let mean = nodes.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / total;
    let var = nodes.iter().zip(&w).map(|(x, w)| (x - mean).powi(2) * w).sum::<f64>() / total;
    Ok(SingleParamEstimate {
        phi: mean,
        var,
        m: counts.total(),
    })
}

/// Ordinary least squares `y = slope x + intercept` with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n < 3 || ys.len() != n {
        return Err(Error::invalid("fit", "need at least three (x, y) pairs"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("fit", "all abscissae coincide"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let s2 = rss / (nf - 2.0);
    Ok(LinearFit {
        slope,
        intercept,
        slope_se: (s2 / sxx).sqrt(),
        intercept_se: (s2 * (1.0 / nf + mx * mx / sxx)).sqrt(),
    })
}

/// Slopes of estimated phase and visibility against the imparted phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFit {
    pub phase: LinearFit,
    pub visibility: LinearFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub fit: CalibrationFit,
    pub imparted: Vec<f64>,
    pub estimates: Vec<EstimateSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Injection {
    /// Multinomial draws.
    Sampled,
    /// Rounded expected counts, no shot noise.
    Expected,
}

/// Simulates a calibration run: one data set per imparted phase, joint
/// estimation of each, and linear fits of the estimates.
///
/// Phase estimates are unwrapped sequentially (shifted by multiples of pi
/// toward the previous estimate), since the model is pi-periodic.
pub fn calibration_sweep(
    phases: &[f64],
    true_v: f64,
    m: u64,
    seed: u64,
    opts: &GridOptions,
    injection: Injection,
) -> Result<CalibrationResult> {
    if phases.len() < 3 {
        return Err(Error::invalid("phases", "a calibration needs at least three phases"));
    }
    let mut estimates: Vec<EstimateSummary> = phases
        .par_iter()
        .enumerate()
        .map(|(k, &phi)| {
            let point = ModelPoint::new(phi, true_v)?;
            let counts = match injection {
                Injection::Sampled => sample_counts_stream(point, m, seed, k as u64, SamplingMode::Postselected)?,
                Injection::Expected => expected_counts(point, m)?,
            };
            estimate_joint(&counts, opts).map(|(_, s)| s)
        })
        .collect::<Result<_>>()?;

    for k in 1..estimates.len() {
        let prev = estimates[k - 1].phi;
        let cur = &mut estimates[k].phi;
        *cur -= PI * ((*cur - prev) / PI).round();
    }
    let phi_b: Vec<f64> = estimates.iter().map(|e| e.phi).collect();
    let v_b: Vec<f64> = estimates.iter().map(|e| e.v).collect();
    let fit = CalibrationFit {
        phase: linear_fit(phases, &phi_b)?,
        visibility: linear_fit(phases, &v_b)?,
    };
    Ok(CalibrationResult {
        fit,
        imparted: phases.to_vec(),
        estimates,
    })
}
