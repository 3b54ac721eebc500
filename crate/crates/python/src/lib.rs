//! Python bindings: model probabilities, simulation, joint estimation,
//! Fisher information and the Holland-Burnett scaling study.
//!
//! Library errors surface as `noonmetry.NoonmetryError` (a `ValueError`
//! subclass) whose message starts with the error kind, e.g.
//! `empty_counts: count record is empty`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use noonmetry::bayes::{self, GridOptions, Injection, SamplingMode};
use noonmetry::fisher::{self, LrtForm, PsConvention};
use noonmetry::hb::{self, StepSpec, Target};
use noonmetry::matrix::Sym2;
use noonmetry::noon::{self, CANONICAL_SETTINGS};

create_exception!(noonmetry, NoonmetryError, PyValueError);

fn py_err(e: noonmetry::Error) -> PyErr {
    NoonmetryError::new_err(format!("{}: {}", e.kind(), e))
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for noonmetry::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn sym_tuple(s: &Sym2) -> (f64, f64, f64) {
    (s.xx, s.yy, s.xy)
}

fn point(phi: f64, v: f64) -> PyResult<noon::ModelPoint> {
    noon::ModelPoint::new(phi, v).py()
}

fn settings_or_default(settings: Option<Vec<f64>>) -> Vec<f64> {
    settings.unwrap_or_else(|| CANONICAL_SETTINGS.to_vec())
}

fn parse_convention(s: &str) -> PyResult<PsConvention> {
    match s {
        "per_event" => Ok(PsConvention::PerEvent),
        "setting_averaged" => Ok(PsConvention::SettingAveraged),
        _ => Err(PyValueError::new_err(format!(
            "convention must be 'per_event' or 'setting_averaged', got {s:?}"
        ))),
    }
}

fn parse_form(s: &str) -> PyResult<LrtForm> {
    match s {
        "verbatim" => Ok(LrtForm::Verbatim),
        "standard" => Ok(LrtForm::Standard),
        _ => Err(PyValueError::new_err(format!("form must be 'verbatim' or 'standard', got {s:?}"))),
    }
}

/// Coincidence counts per wave-plate setting.
#[pyclass(name = "CountRecord", module = "noonmetry", frozen)]
#[derive(Clone)]
pub struct PyCountRecord {
    inner: bayes::CountRecord,
}

#[pymethods]
impl PyCountRecord {
    #[new]
    #[pyo3(signature = (settings, coincidences, bunched=None))]
    fn new(settings: Vec<f64>, coincidences: Vec<u64>, bunched: Option<Vec<[u64; 2]>>) -> PyResult<Self> {
        Ok(PyCountRecord {
            inner: bayes::CountRecord::new(settings, coincidences, bunched).py()?,
        })
    }

    #[getter]
    fn settings(&self) -> Vec<f64> {
        self.inner.settings()
    }

    #[getter]
    fn coincidences(&self) -> Vec<u64> {
        self.inner.coincidences().to_vec()
    }

    #[getter]
    fn bunched(&self) -> Option<Vec<[u64; 2]>> {
        self.inner.bunched().map(<[_]>::to_vec)
    }

    #[getter]
    fn total(&self) -> u64 {
        self.inner.total()
    }

    fn digest(&self) -> String {
        self.inner.digest()
    }

    /// Serializes to the counts CSV format.
    fn to_csv(&self) -> String {
        noonmetry::io::write_counts_csv(&self.inner, &[])
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(PyCountRecord {
            inner: noonmetry::io::parse_counts_csv(text).py()?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("CountRecord(settings={:?}, coincidences={:?})", self.inner.settings(), self.inner.coincidences())
    }
}

/// Posterior means and covariance `(var_phi, var_v, cov_phi_v)`.
#[pyclass(name = "EstimateSummary", module = "noonmetry", frozen, get_all)]
#[derive(Clone)]
pub struct PyEstimate {
    phi: f64,
    v: f64,
    cov: (f64, f64, f64),
    m: u64,
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!("EstimateSummary(phi={}, v={}, cov={:?}, m={})", self.phi, self.v, self.cov, self.m)
    }
}

impl From<bayes::EstimateSummary> for PyEstimate {
    fn from(s: bayes::EstimateSummary) -> Self {
        PyEstimate {
            phi: s.phi,
            v: s.v,
            cov: sym_tuple(&s.cov),
            m: s.m,
        }
    }
}

/// Two-parameter Fisher matrix with entries `(F_11, F_22, F_12)`.
#[pyclass(name = "FisherMatrix", module = "noonmetry", frozen)]
#[derive(Clone)]
pub struct PyFisher {
    inner: fisher::FisherMatrix2,
}

#[pymethods]
impl PyFisher {
    #[getter]
    fn entries(&self) -> (f64, f64, f64) {
        sym_tuple(&self.inner.entries)
    }

    #[getter]
    fn params(&self) -> (&'static str, &'static str) {
        let [a, b] = self.inner.params.labels();
        (a, b)
    }

    #[getter]
    fn divergent(&self) -> bool {
        self.inner.divergent
    }

    /// Normalized correlation of the bound.
    fn xi(&self) -> f64 {
        self.inner.xi()
    }

    /// `F^{-1} / m` as `(var_1, var_2, cov_12)`.
    fn crb(&self, m: f64) -> PyResult<(f64, f64, f64)> {
        Ok(sym_tuple(&fisher::crb(&self.inner, m).py()?.bound))
    }

    fn __repr__(&self) -> String {
        format!("FisherMatrix(entries={:?}, divergent={})", self.entries(), self.inner.divergent)
    }
}

/// Fisher information of an HB probe at one phase.
#[pyclass(name = "HbFisherPoint", module = "noonmetry", frozen, get_all)]
#[derive(Clone)]
pub struct PyHbPoint {
    n: u32,
    epsilon: f64,
    phi: f64,
    entries: (f64, f64, f64),
    eff_phi: Option<f64>,
    eff_eps: Option<f64>,
    singular: bool,
    converged: bool,
}

#[pymethods]
impl PyHbPoint {
    fn __repr__(&self) -> String {
        format!(
            "HbFisherPoint(n={}, epsilon={}, phi={}, eff_phi={:?}, eff_eps={:?})",
            self.n, self.epsilon, self.phi, self.eff_phi, self.eff_eps
        )
    }
}

/// Phase-optimized effective informations and their trade-off.
#[pyclass(name = "ScalingPoint", module = "noonmetry", frozen, get_all)]
#[derive(Clone)]
pub struct PyScalingPoint {
    n: u32,
    epsilon: f64,
    phi_opt_phi: f64,
    max_eff_phi: f64,
    phi_opt_eps: f64,
    max_eff_eps: f64,
    upsilon: f64,
}

#[pymethods]
impl PyScalingPoint {
    fn __repr__(&self) -> String {
        format!(
            "ScalingPoint(n={}, epsilon={}, max_eff_phi={}, max_eff_eps={}, upsilon={})",
            self.n, self.epsilon, self.max_eff_phi, self.max_eff_eps, self.upsilon
        )
    }
}

/// `(p1, p2)`: coincidence and one bunched outcome.
#[pyfunction]
fn probs_full(theta: f64, phi: f64, v: f64) -> PyResult<(f64, f64)> {
    let p = noon::probs_full(theta, point(phi, v)?).py()?;
    Ok((p.p1, p.p2))
}

#[pyfunction]
fn prob_postselected(theta: f64, phi: f64, v: f64) -> PyResult<f64> {
    noon::prob_postselected(theta, point(phi, v)?).py()
}

#[pyfunction]
fn visibility_from_distinguishability(epsilon: f64) -> PyResult<f64> {
    noon::visibility_from_distinguishability(epsilon).py()
}

#[pyfunction]
#[pyo3(signature = (phi, v, m, seed, mode="postselected"))]
fn sample_counts(phi: f64, v: f64, m: u64, seed: u64, mode: &str) -> PyResult<PyCountRecord> {
    let mode = match mode {
        "postselected" => SamplingMode::Postselected,
        "full" => SamplingMode::Full,
        _ => return Err(PyValueError::new_err("mode must be 'postselected' or 'full'")),
    };
    Ok(PyCountRecord {
        inner: bayes::sample_counts(point(phi, v)?, m, seed, mode).py()?,
    })
}

#[pyfunction]
fn expected_counts(phi: f64, v: f64, m: u64) -> PyResult<PyCountRecord> {
    Ok(PyCountRecord {
        inner: bayes::expected_counts(point(phi, v)?, m).py()?,
    })
}

/// Grid posterior over `(phi, v)`; the grid is centred by a coarse
/// likelihood search unless `phi_center` is given.
#[pyfunction]
#[pyo3(signature = (counts, phi_center=None, phi_half_width=0.25, v_range=(0.9, 1.0), phi_points=512, v_points=512))]
fn estimate_joint(
    py: Python<'_>,
    counts: &PyCountRecord,
    phi_center: Option<f64>,
    phi_half_width: f64,
    v_range: (f64, f64),
    phi_points: usize,
    v_points: usize,
) -> PyResult<PyEstimate> {
    let opts = GridOptions {
        phi_center,
        phi_half_width,
        v_range,
        phi_points,
        v_points,
    };
    let counts = counts.inner.clone();
    let (_, s) = py.allow_threads(|| bayes::estimate_joint(&counts, &opts)).py()?;
    Ok(s.into())
}

#[pyfunction]
#[pyo3(signature = (phi, v, settings=None, convention="per_event"))]
fn fisher_postselected(phi: f64, v: f64, settings: Option<Vec<f64>>, convention: &str) -> PyResult<PyFisher> {
    Ok(PyFisher {
        inner: fisher::fisher_postselected(point(phi, v)?, &settings_or_default(settings), parse_convention(convention)?),
    })
}

#[pyfunction]
#[pyo3(signature = (phi, v, settings=None))]
fn fisher_full(phi: f64, v: f64, settings: Option<Vec<f64>>) -> PyResult<PyFisher> {
    Ok(PyFisher {
        inner: fisher::fisher_full(point(phi, v)?, &settings_or_default(settings)),
    })
}

/// Covariance test statistic for `sigma` against the information `fisher`.
#[pyfunction]
#[pyo3(signature = (fisher, sigma, m, form="verbatim"))]
fn lrt_statistic(fisher: (f64, f64, f64), sigma: (f64, f64, f64), m: f64, form: &str) -> PyResult<f64> {
    let f = Sym2::new(fisher.0, fisher.1, fisher.2);
    let s = Sym2::new(sigma.0, sigma.1, sigma.2);
    Ok(fisher::lrt_statistic(&f, &s, m, parse_form(form)?).py()?.statistic)
}

/// Outcome distribution over the total horizontal photon number.
#[pyfunction]
fn hb_probabilities(n: u32, epsilon: f64, phi: f64, setting: f64) -> PyResult<Vec<f64>> {
    Ok(hb::hb_probabilities(n, epsilon, phi, setting).py()?.probs)
}

#[pyfunction]
#[pyo3(signature = (n, epsilon, phi, h_phi=1e-4, h_eps=1e-4, richardson=false))]
fn fisher_hb(n: u32, epsilon: f64, phi: f64, h_phi: f64, h_eps: f64, richardson: bool) -> PyResult<PyHbPoint> {
    let step = StepSpec {
        h_phi,
        h_eps,
        richardson,
        convergence_check: true,
    };
    let p = hb::fisher_hb(n, epsilon, phi, &step).py()?;
    Ok(PyHbPoint {
        n: p.n,
        epsilon: p.epsilon,
        phi: p.phi,
        entries: sym_tuple(&p.fisher.entries),
        eff_phi: p.eff_phi,
        eff_eps: p.eff_eps,
        singular: p.singular,
        converged: p.converged,
    })
}

/// Grid phase maximizing the effective information on `target`
/// (`"phi"` or `"epsilon"`); returns `(phase, value)`.
#[pyfunction]
#[pyo3(signature = (n, epsilon, target="phi", phase_points=181))]
fn optimize_phase(py: Python<'_>, n: u32, epsilon: f64, target: &str, phase_points: usize) -> PyResult<(f64, f64)> {
    let target = match target {
        "phi" => Target::Phi,
        "epsilon" => Target::Epsilon,
        _ => return Err(PyValueError::new_err("target must be 'phi' or 'epsilon'")),
    };
    let grid = hb::phase_grid(phase_points);
    py.allow_threads(|| hb::optimize_phase(n, epsilon, target, &grid, &StepSpec::default()))
        .py()
}

#[pyfunction]
#[pyo3(signature = (n, epsilon, phase_points=181))]
fn upsilon(py: Python<'_>, n: u32, epsilon: f64, phase_points: usize) -> PyResult<PyScalingPoint> {
    let grid = hb::phase_grid(phase_points);
    let s = py
        .allow_threads(|| hb::upsilon(n, epsilon, &grid, &StepSpec::default()))
        .py()?;
    Ok(PyScalingPoint {
        n: s.n,
        epsilon: s.epsilon,
        phi_opt_phi: s.phi_opt_phi,
        max_eff_phi: s.max_eff_phi,
        phi_opt_eps: s.phi_opt_eps,
        max_eff_eps: s.max_eff_eps,
        upsilon: s.upsilon,
    })
}

/// Simulated calibration; returns `(phase_slope, visibility_slope, estimates)`.
#[pyfunction]
#[pyo3(signature = (phases, v, m, seed, sampled=true))]
fn calibration_sweep(
    py: Python<'_>,
    phases: Vec<f64>,
    v: f64,
    m: u64,
    seed: u64,
    sampled: bool,
) -> PyResult<(f64, f64, Vec<PyEstimate>)> {
    let injection = if sampled { Injection::Sampled } else { Injection::Expected };
    let res = py
        .allow_threads(|| bayes::calibration_sweep(&phases, v, m, seed, &GridOptions::default(), injection))
        .py()?;
    Ok((
        res.fit.phase.slope,
        res.fit.visibility.slope,
        res.estimates.into_iter().map(Into::into).collect(),
    ))
}

#[pymodule]
#[pyo3(name = "noonmetry")]
pub fn noonmetry_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NoonmetryError", m.py().get_type::<NoonmetryError>())?;
    m.add("CANONICAL_SETTINGS", CANONICAL_SETTINGS.to_vec())?;
    m.add("LRT_CRITICAL_95", fisher::LRT_CRITICAL_95)?;
    m.add_class::<PyCountRecord>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyFisher>()?;
    m.add_class::<PyHbPoint>()?;
    m.add_class::<PyScalingPoint>()?;
    m.add_function(wrap_pyfunction!(probs_full, m)?)?;
    m.add_function(wrap_pyfunction!(prob_postselected, m)?)?;
    m.add_function(wrap_pyfunction!(visibility_from_distinguishability, m)?)?;
    m.add_function(wrap_pyfunction!(sample_counts, m)?)?;
    m.add_function(wrap_pyfunction!(expected_counts, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_joint, m)?)?;
    m.add_function(wrap_pyfunction!(fisher_postselected, m)?)?;
    m.add_function(wrap_pyfunction!(fisher_full, m)?)?;
    m.add_function(wrap_pyfunction!(lrt_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(hb_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(fisher_hb, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_phase, m)?)?;
    m.add_function(wrap_pyfunction!(upsilon, m)?)?;
    m.add_function(wrap_pyfunction!(calibration_sweep, m)?)?;
    Ok(())
}
