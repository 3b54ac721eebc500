//! Fisher information of 2N-photon Holland-Burnett probes over phase and
//! distinguishability, and the trade-off between the two.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::linear_fit;
use crate::diff::{derivative, richardson, Stencil};
use crate::error::{Error, Result};
use crate::fisher::{FisherFlavor, FisherMatrix2, Params};
use crate::fock::{evolve_probe, outcome_probabilities, HbConfig, OutcomeDistribution, HB_SETTINGS};
use crate::matrix::Sym2;

const ZERO_PROB: f64 = 1e-14;
const CONVERGENCE_RTOL: f64 = 1e-4;

/// Outcome distribution for one of the two phase settings.
pub fn hb_probabilities(n: u32, epsilon: f64, phi: f64, setting: f64) -> Result<OutcomeDistribution> {
    let cfg = HbConfig::new(n, epsilon)?;
    outcome_probabilities(&evolve_probe(cfg, phi, setting), n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepSpec {
    pub h_phi: f64,
    pub h_eps: f64,
    pub richardson: bool,
    /// Recompute with halved steps and flag entries that moved.
    pub convergence_check: bool,
}

impl Default for StepSpec {
    fn default() -> Self {
        StepSpec {
            h_phi: 1e-4,
            h_eps: 1e-4,
            richardson: false,
            convergence_check: true,
        }
    }
}

impl StepSpec {
    fn halved(&self) -> Self {
        StepSpec {
            h_phi: 0.5 * self.h_phi,
            h_eps: 0.5 * self.h_eps,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HbFisherPoint {
    pub n: u32,
    pub epsilon: f64,
    pub phi: f64,
    pub fisher: FisherMatrix2,
    /// `1 / (F^{-1})_{phi,phi}`; plain `F_phi,phi` when epsilon is not estimated.
    pub eff_phi: Option<f64>,
    pub eff_eps: Option<f64>,
    pub singular: bool,
    pub converged: bool,
    /// Outcomes skipped because their probability vanished.
    pub zero_terms: usize,
}

fn raw_fisher(cfg: HbConfig, phi: f64, step: &StepSpec) -> Result<(Sym2, usize)> {
    let n = cfg.n();
    let eps = cfg.epsilon();
    let estimate_eps = eps > 0.0;
    let mut m = Sym2::ZERO;
    let mut zero_terms = 0;
    for &setting in &HB_SETTINGS {
        let probs_at = |e: f64, p: f64| -> Vec<f64> {
            let cfg = HbConfig::new(n, e.clamp(0.0, 1.0)).expect("validated");
            outcome_probabilities(&evolve_probe(cfg, p, setting), n)
                .expect("state built with 2N photons")
                .probs
        };
        let p0 = probs_at(eps, phi);
        let along_phi = |x: f64| probs_at(eps, x);
        let d_phi = if step.richardson {
            richardson(&along_phi, phi, step.h_phi, Stencil::Central)
        } else {
            derivative(&along_phi, phi, step.h_phi, Stencil::Central)
        };
        let d_eps = if estimate_eps {
            let along_eps = |x: f64| probs_at(x, phi);
            let st = Stencil::within(eps, step.h_eps * if step.richardson { 2.0 } else { 1.0 }, 0.0, 1.0);
            let st = match st {
                // a second-order one-sided stencil needs 2h of room
                Stencil::Central => st,
                _ => Stencil::within(eps, 2.0 * step.h_eps, 0.0, 1.0),
            };
            if step.richardson {
                richardson(&along_eps, eps, step.h_eps, st)
            } else {
                derivative(&along_eps, eps, step.h_eps, st)
            }
        } else {
            vec![0.0; p0.len()]
        };
        for (x, &p) in p0.iter().enumerate() {
            if p <= ZERO_PROB {
                zero_terms += 1;
                continue;
            }
            let (a, b) = (d_phi[x], d_eps[x]);
            m = m.add(&Sym2::new(a * a / p, b * b / p, a * b / p).scale(0.5));
        }
    }
    Ok((m, zero_terms))
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= CONVERGENCE_RTOL * a.abs().max(b.abs()).max(1e-8 * scale)
}

/// Fisher matrix over `(phi, epsilon)` with numerically differentiated
/// outcome probabilities, the two settings weighted 1/2 each.
///
/// At `epsilon = 0` every probability is stationary in epsilon, so only the
/// phase information is reported.
pub fn fisher_hb(n: u32, epsilon: f64, phi: f64, step: &StepSpec) -> Result<HbFisherPoint> {
    let cfg = HbConfig::new(n, epsilon)?;
    if !(step.h_phi > 0.0 && step.h_eps > 0.0) {
        return Err(Error::invalid("step", "finite-difference steps must be positive"));
    }
    let (m, zero_terms) = raw_fisher(cfg, phi, step)?;
    let converged = if step.convergence_check {
        let (fine, _) = raw_fisher(cfg, phi, &step.halved())?;
        let scale = m.trace().abs();
        close(m.xx, fine.xx, scale) && close(m.yy, fine.yy, scale) && close(m.xy, fine.xy, scale)
    } else {
        true
    };

    let (eff_phi, eff_eps, singular) = if epsilon == 0.0 {
        (Some(m.xx), None, true)
    } else {
        let det = m.det();
        let tiny = 1e-12 * m.xx * m.yy;
        if det > tiny && det > 0.0 {
            (Some(det / m.yy), Some(det / m.xx), false)
        } else if m.yy <= 1e-12 * m.xx.max(1.0) {
            (Some(m.xx), None, true)
        } else if m.xx <= 1e-12 * m.yy.max(1.0) {
            (None, Some(m.yy), true)
        } else {
            (Some(0.0), Some(0.0), true)
        }
    };
    Ok(HbFisherPoint {
        n,
        epsilon,
        phi,
        fisher: FisherMatrix2 {
            entries: m,
            params: Params::PhiEpsilon,
            flavor: FisherFlavor::HbNumerical,
            point: (phi, epsilon),
            divergent: false,
        },
        eff_phi,
        eff_eps,
        singular,
        converged,
        zero_terms,
    })
}

/// `points` cell midpoints over one period `[0, pi)`. Midpoints keep the grid
/// off `phi = 0`, where the probe is an eigenstate of the measurement.
pub fn phase_grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| (k as f64 + 0.5) * PI / points as f64).collect()
}

pub const DEFAULT_PHASE_POINTS: usize = 181;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Phi,
    Epsilon,
}

fn target_value(p: &HbFisherPoint, target: Target) -> Option<f64> {
    match target {
        Target::Phi => p.eff_phi,
        Target::Epsilon => p.eff_eps,
    }
}

/// Evaluates [`fisher_hb`] over a phase grid in parallel, keeping grid order.
pub fn scan_phases(n: u32, epsilon: f64, grid: &[f64], step: &StepSpec) -> Result<Vec<HbFisherPoint>> {
    grid.par_iter().map(|&phi| fisher_hb(n, epsilon, phi, step)).collect()
}

fn argmax(points: &[HbFisherPoint], target: Target) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for p in points {
        if let Some(val) = target_value(p, target) {
            // strict comparison keeps the smallest phase on ties
            if best.is_none_or(|(_, b)| val > b) {
                best = Some((p.phi, val));
            }
        }
    }
    best
}

/// Phase on the grid that maximizes the effective information on `target`.
pub fn optimize_phase(n: u32, epsilon: f64, target: Target, grid: &[f64], step: &StepSpec) -> Result<(f64, f64)> {
    let points = scan_phases(n, epsilon, grid, step)?;
    argmax(&points, target).ok_or(Error::AllSingular)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: u32,
    pub epsilon: f64,
    pub phi_opt_phi: f64,
    pub max_eff_phi: f64,
    pub phi_opt_eps: f64,
    pub max_eff_eps: f64,
    pub upsilon: f64,
    /// Phase where the normalized sum peaks.
    pub phi_upsilon: f64,
    /// Grid points that failed the step-halving check.
    pub unconverged: usize,
}

/// Best jointly attainable sum of normalized effective informations.
pub fn upsilon(n: u32, epsilon: f64, grid: &[f64], step: &StepSpec) -> Result<ScalingPoint> {
    if epsilon <= 0.0 {
        return Err(Error::invalid("epsilon", "the trade-off needs epsilon > 0"));
    }
    let points = scan_phases(n, epsilon, grid, step)?;
    let (phi_opt_phi, max_phi) = argmax(&points, Target::Phi).ok_or(Error::AllSingular)?;
    let (phi_opt_eps, max_eps) = argmax(&points, Target::Epsilon).ok_or(Error::AllSingular)?;
    if !(max_phi > 0.0 && max_eps > 0.0) {
        return Err(Error::AllSingular);
    }
    let mut best = (f64::NEG_INFINITY, 0.0);
    for p in &points {
        if let (Some(a), Some(b)) = (p.eff_phi, p.eff_eps) {
            let sum = a / max_phi + b / max_eps;
            if sum > best.0 {
                best = (sum, p.phi);
            }
        }
    }
    Ok(ScalingPoint {
        n,
        epsilon,
        phi_opt_phi,
        max_eff_phi: max_phi,
        phi_opt_eps,
        max_eff_eps: max_eps,
        upsilon: best.0,
        phi_upsilon: best.1,
        unconverged: points.iter().filter(|p| !p.converged).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u32,
    pub epsilon: f64,
    pub result: std::result::Result<ScalingPoint, String>,
}

/// [`upsilon`] over every `(N, epsilon)` pair. Failures are recorded per row.
pub fn scaling_sweep(ns: &[u32], epsilons: &[f64], step: &StepSpec, grid: &[f64]) -> Vec<SweepRow> {
    let pairs: Vec<(u32, f64)> = ns.iter().flat_map(|&n| epsilons.iter().map(move |&e| (n, e))).collect();
    pairs
        .par_iter()
        .map(|&(n, epsilon)| SweepRow {
            n,
            epsilon,
            result: upsilon(n, epsilon, grid, step).map_err(|e| e.to_string()),
        })
        .collect()
}

/// Slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    Ok(linear_fit(&lx, &ly)?.slope)
}

/// Distinguishability values shown in the scaling study.
pub const STUDY_EPSILONS: [f64; 5] = [0.14, 0.23, 0.32, 0.50, 1.0];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::fisher_full;
    use crate::fock::{FockStateVector, ModeOccupation};
    use crate::noon::{visibility_from_distinguishability, visibility_jacobian, ModelPoint};
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use std::collections::BTreeMap;

    /// Creation-operator polynomial expansion of the rotated probe, with
    /// monomials keyed by occupation; independent of the mixing recursion.
    fn polynomial_probe(n: u32, eps: f64, alpha: f64) -> FockStateVector {
        let (s, c) = (0.5 * alpha).sin_cos();
        let fact = |k: u32| (1..=k).fold(1.0, |a, i| a * i as f64);
        // polynomial: map occupation -> coefficient of the monomial prod (op^+)^k
        type Poly = BTreeMap<[u32; 4], f64>;
        let mul = |p: &Poly, lin: &[(usize, f64)]| {
            let mut out = Poly::new();
            for (k, v) in p {
                for &(mode, w) in lin {
                    let mut kk = *k;
                    kk[mode] += 1;
                    *out.entry(kk).or_insert(0.0) += v * w;
                }
            }
            out
        };
        // a_H^+ -> c a_H^+ + s a_V^+ ; a_V^+ -> c a_V^+ - s a_H^+ (same on q)
        let ah = [(0, c), (1, s)];
        let bv = [
            (1, (1.0 - eps * eps).sqrt() * c),
            (0, -(1.0 - eps * eps).sqrt() * s),
            (3, eps * c),
            (2, -eps * s),
        ];
        let mut poly = Poly::from([([0, 0, 0, 0], 1.0 / fact(n))]);
        for _ in 0..n {
            poly = mul(&poly, &ah);
        }
        for _ in 0..n {
            poly = mul(&poly, &bv);
        }
        FockStateVector::from_amplitudes(poly.into_iter().map(|(k, v)| {
            let norm = k.iter().map(|&x| fact(x)).product::<f64>().sqrt();
            (ModeOccupation::new(k[0], k[1], k[2], k[3]), Complex64::new(v * norm, 0.0))
        }))
    }

    #[test]
    fn matches_polynomial_expansion_n3() {
        for setting in HB_SETTINGS {
            let oracle = polynomial_probe(3, 0.5, 0.7 + setting);
            let p_or = outcome_probabilities(&oracle, 3).unwrap();
            let p = hb_probabilities(3, 0.5, 0.7, setting).unwrap();
            for (a, b) in p.probs.iter().zip(&p_or.probs) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
            assert!((p.total() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn n1_reduces_to_two_photon_populations() {
        let p = hb_probabilities(1, 0.0, 0.4, 0.0).unwrap();
        assert_relative_eq!(p.probs[1], 0.4f64.cos().powi(2), epsilon = 1e-14);
    }

    #[test]
    fn indistinguishable_phase_information() {
        let step = StepSpec {
            richardson: true,
            h_phi: 1e-3,
            ..StepSpec::default()
        };
        for (n, want) in [(1u32, 4.0), (2, 12.0)] {
            let p = fisher_hb(n, 0.0, 0.37, &step).unwrap();
            assert_relative_eq!(p.eff_phi.unwrap(), want, max_relative = 1e-6);
            assert!(p.eff_eps.is_none());
            assert!(p.singular);
        }
    }

    #[test]
    fn step_halving_agrees() {
        let step = StepSpec::default();
        let p = fisher_hb(2, 0.5, 0.3, &step).unwrap();
        assert!(p.converged);
        let q = fisher_hb(2, 0.5, 0.3, &step.halved()).unwrap();
        for (a, b) in [
            (p.fisher.entries.xx, q.fisher.entries.xx),
            (p.fisher.entries.yy, q.fisher.entries.yy),
            (p.fisher.entries.xy, q.fisher.entries.xy),
        ] {
            assert!((a - b).abs() <= 1e-4 * a.abs());
        }
    }

    #[test]
    fn effective_values_bounded_by_diagonal() {
        let step = StepSpec::default();
        for &phi in &[0.2, 0.9, 1.7] {
            let p = fisher_hb(3, 0.32, phi, &step).unwrap();
            let e = p.fisher.entries;
            assert!(p.eff_phi.unwrap() <= e.xx * (1.0 + 1e-12));
            assert!(p.eff_eps.unwrap() <= e.yy * (1.0 + 1e-12));
            assert!(p.eff_phi.unwrap() >= 0.0);
        }
    }

    #[test]
    fn n1_matches_two_photon_full_fisher() {
        // HB settings {0, pi/2} are wave-plate angles {0, -pi/8}
        let settings = [0.0, -PI / 8.0];
        let step = StepSpec {
            richardson: true,
            h_phi: 1e-3,
            h_eps: 1e-3,
            ..StepSpec::default()
        };
        for &(phi, eps) in &[(0.3, 0.4), (1.1, 0.7), (2.0, 0.2)] {
            let hb = fisher_hb(1, eps, phi, &step).unwrap().fisher.entries;
            let v = visibility_from_distinguishability(eps).unwrap();
            let j = visibility_jacobian(eps);
            let f = fisher_full(ModelPoint::new(phi, v).unwrap(), &settings).entries;
            assert_relative_eq!(hb.xx, f.xx, max_relative = 1e-6);
            assert_relative_eq!(hb.yy, j * j * f.yy, max_relative = 1e-6);
            assert_relative_eq!(hb.xy, j * f.xy, max_relative = 1e-6);
        }
    }

    #[test]
    fn optimizer_reports_phase_in_one_period() {
        let grid = phase_grid(36);
        let (phi, val) = optimize_phase(2, 0.5, Target::Epsilon, &grid, &StepSpec::default()).unwrap();
        assert!((0.0..PI).contains(&phi));
        assert!(val > 0.0);
        // shifting the whole grid by one period gives the same maximum
        let shifted: Vec<f64> = grid.iter().map(|g| g + PI).collect();
        let (_, val2) = optimize_phase(2, 0.5, Target::Epsilon, &shifted, &StepSpec::default()).unwrap();
        assert_relative_eq!(val, val2, max_relative = 1e-6);
    }

    #[test]
    fn upsilon_is_bounded() {
        let grid = phase_grid(45);
        let s = upsilon(2, 0.5, &grid, &StepSpec::default()).unwrap();
        assert!((1.0..=2.0 + 1e-12).contains(&s.upsilon));
        assert!(upsilon(2, 0.0, &grid, &StepSpec::default()).is_err());
    }

    #[test]
    fn sweep_keeps_order_and_records_failures() {
        let grid = phase_grid(12);
        let rows = scaling_sweep(&[1, 2], &[0.0, 0.5], &StepSpec::default(), &grid);
        let keys: Vec<(u32, f64)> = rows.iter().map(|r| (r.n, r.epsilon)).collect();
        assert_eq!(keys, vec![(1, 0.0), (1, 0.5), (2, 0.0), (2, 0.5)]);
        assert!(rows[0].result.is_err());
        assert!(rows[1].result.is_ok());
    }

    #[test]
    fn epsilon_continuity() {
        // one-sided slope at an interior point agrees with the extrapolated one
        let f = |e: f64| hb_probabilities(2, e, 0.6, 0.0).unwrap().probs[2];
        let exact = crate::diff::richardson_scalar(f, 0.4, 1e-3);
        let h = 1e-5;
        let plain = (f(0.4 + h) - f(0.4 - h)) / (2.0 * h);
        assert!((plain - exact).abs() < 1e-6);
    }
}
