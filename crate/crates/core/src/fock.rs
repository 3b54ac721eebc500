//! Exact four-mode Fock-state simulation of Holland-Burnett probes.
//!
//! The probe lives on two polarization pairs: the interfering pair
//! `(a_H, a_V)` and the distinguishable pair `(q_H, q_V)`. A polarization
//! rotation acts identically on both pairs and conserves the photon number
//! within each pair, so every rotation is applied block-wise with the
//! `(n + 1) x (n + 1)` two-mode mixing matrix of the block's photon number.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Photon counts in the four modes `a_H, a_V, q_H, q_V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ModeOccupation {
    pub a_h: u32,
    pub a_v: u32,
    pub q_h: u32,
    pub q_v: u32,
}

impl ModeOccupation {
    pub const fn new(a_h: u32, a_v: u32, q_h: u32, q_v: u32) -> Self {
        ModeOccupation { a_h, a_v, q_h, q_v }
    }

    pub fn total(&self) -> u32 {
        self.a_h + self.a_v + self.q_h + self.q_v
    }

    fn pair(&self, pair: ModePair) -> (u32, u32) {
        match pair {
            ModePair::A => (self.a_h, self.a_v),
            ModePair::Q => (self.q_h, self.q_v),
        }
    }

    fn with_pair(mut self, pair: ModePair, h: u32, v: u32) -> Self {
        match pair {
            ModePair::A => {
                self.a_h = h;
                self.a_v = v;
            }
            ModePair::Q => {
                self.q_h = h;
                self.q_v = v;
            }
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModePair {
    /// `(a_H, a_V)`, the modes that interfere.
    A,
    /// `(q_H, q_V)`, the distinguishable component.
    Q,
}

/// Sparse pure state over four-mode occupations. Missing keys have zero amplitude.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FockStateVector {
    amplitudes: BTreeMap<ModeOccupation, Complex64>,
}

impl FockStateVector {
    pub fn from_amplitudes<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (ModeOccupation, Complex64)>,
    {
        let mut amplitudes = BTreeMap::new();
        for (occ, amp) in entries {
            *amplitudes.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        amplitudes.retain(|_, a: &mut Complex64| a.norm_sqr() > 0.0);
        FockStateVector { amplitudes }
    }

    /// A single basis state with unit amplitude.
    pub fn basis(occ: ModeOccupation) -> Self {
        Self::from_amplitudes([(occ, Complex64::new(1.0, 0.0))])
    }

    pub fn amplitude(&self, occ: &ModeOccupation) -> Complex64 {
        self.amplitudes
            .get(occ)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModeOccupation, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Photon number shared by every populated occupation, if there is one.
    pub fn photon_number(&self) -> Option<u32> {
        let mut totals = self.amplitudes.keys().map(ModeOccupation::total);
        let first = totals.next()?;
        totals.all(|t| t == first).then_some(first)
    }
}

/// Input parameters of a Holland-Burnett probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HbConfig {
    n: u32,
    epsilon: f64,
}

impl HbConfig {
    pub fn new(n: u32, epsilon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("N", "photons per arm must be at least 1"));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::invalid(
                "epsilon",
                format!("distinguishability {epsilon} outside [0, 1]"),
            ));
        }
        Ok(HbConfig { n, epsilon })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Total-count distribution over outcomes `x = 0..=2N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    pub probs: Vec<f64>,
    /// `by_split[x][s]` is the share of `probs[x]` with `s` photons in `a_H`.
    pub by_split: Vec<Vec<f64>>,
}

impl OutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

fn ln_binomial(n: u32, k: u32) -> f64 {
    use statrs::function::factorial::ln_factorial;
    ln_factorial(n as u64) - ln_factorial(k as u64) - ln_factorial((n - k) as u64)
}

/// Expands `(a_H^+)^N (sqrt(1-eps^2) a_V^+ + eps q_V^+)^N |0> / N!` in the
/// normalized Fock basis. The amplitude on `(N, k, 0, N-k)` is
/// `sqrt(C(N,k)) (1-eps^2)^(k/2) eps^(N-k)`.
pub fn build_hb_input(cfg: HbConfig) -> FockStateVector {
    let n = cfg.n;
    let eps = cfg.epsilon;
    let keep = 1.0 - eps * eps;
    let entries = (0..=n).filter_map(|k| {
        let mut amp = (0.5 * ln_binomial(n, k)).exp();
        amp *= keep.powf(0.5 * k as f64);
        amp *= eps.powi((n - k) as i32);
        (amp != 0.0).then(|| {
            (
                ModeOccupation::new(n, k, 0, n - k),
                Complex64::new(amp, 0.0),
            )
        })
    });
    FockStateVector::from_amplitudes(entries)
}

/// Two-mode mixing matrices for every photon number up to `max_n`.
///
/// The creation operators transform as `h -> c h + s v`, `v -> c v - s h`
/// with `c = cos(angle/2)`, `s = sin(angle/2)`. Entry `[n][j][m]` is the
/// amplitude on `|j, n-j>` produced from `|m, n-m>`. Each block is built
/// from the previous one by adding a single photon, so no large binomial
/// sums with cancellations appear.
#[derive(Debug, Clone)]
pub struct MixingMatrices {
    blocks: Vec<Vec<Vec<f64>>>,
}

impl MixingMatrices {
    pub fn new(max_n: u32, angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        let mut blocks: Vec<Vec<Vec<f64>>> = Vec::with_capacity(max_n as usize + 1);
        blocks.push(vec![vec![1.0]]);
        for n in 1..=max_n as usize {
            let prev = &blocks[n - 1];
            let mut cur = vec![vec![0.0; n + 1]; n + 1];
            // column 0: |0, n> = a_V^+ |0, n-1> / sqrt(n)
            let inv = 1.0 / (n as f64).sqrt();
            for j in 0..n {
                let d = prev[j][0];
                if d == 0.0 {
                    continue;
                }
                cur[j][0] += c * d * ((n - j) as f64).sqrt() * inv;
                cur[j + 1][0] -= s * d * ((j + 1) as f64).sqrt() * inv;
            }
            // column m >= 1: |m, n-m> = a_H^+ |m-1, n-m> / sqrt(m)
            for m in 1..=n {
                let inv = 1.0 / (m as f64).sqrt();
                for j in 0..n {
                    let d = prev[j][m - 1];
                    if d == 0.0 {
                        continue;
                    }
                    cur[j + 1][m] += c * d * ((j + 1) as f64).sqrt() * inv;
                    cur[j][m] += s * d * ((n - j) as f64).sqrt() * inv;
                }
            }
            blocks.push(cur);
        }
        MixingMatrices { blocks }
    }

    pub fn max_n(&self) -> u32 {
        (self.blocks.len() - 1) as u32
    }

    pub fn block(&self, n: u32) -> &[Vec<f64>] {
        &self.blocks[n as usize]
    }
}

fn rotate_with(state: &FockStateVector, pair: ModePair, mats: &MixingMatrices) -> FockStateVector {
    let mut out: BTreeMap<ModeOccupation, Complex64> = BTreeMap::new();
    for (occ, amp) in state.iter() {
        let (h, v) = occ.pair(pair);
        let n = h + v;
        let block = mats.block(n);
        for j in 0..=n {
            let d = block[j as usize][h as usize];
            if d == 0.0 {
                continue;
            }
            let target = occ.with_pair(pair, j, n - j);
            *out.entry(target).or_insert(Complex64::new(0.0, 0.0)) += amp * d;
        }
    }
    out.retain(|_, a| a.norm_sqr() > 0.0);
    FockStateVector { amplitudes: out }
}

fn max_pair_photons(state: &FockStateVector) -> u32 {
    state
        .iter()
        .map(|(o, _)| (o.a_h + o.a_v).max(o.q_h + o.q_v))
        .max()
        .unwrap_or(0)
}

/// Polarization rotation on one mode pair.
pub fn apply_pair_rotation(state: &FockStateVector, pair: ModePair, angle: f64) -> FockStateVector {
    let mats = MixingMatrices::new(max_pair_photons(state), angle);
    rotate_with(state, pair, &mats)
}

/// Rotates both pairs by `phi + setting`, the combined effect of the sample
/// and the measurement setting on the polarization.
pub fn evolve_probe(cfg: HbConfig, phi: f64, setting: f64) -> FockStateVector {
    let input = build_hb_input(cfg);
    let mats = MixingMatrices::new(2 * cfg.n, phi + setting);
    let rotated = rotate_with(&input, ModePair::A, &mats);
    rotate_with(&rotated, ModePair::Q, &mats)
}

/// Distribution of the total count on `a_H` and `q_H`, marginalizing the V modes.
pub fn outcome_probabilities(state: &FockStateVector, n: u32) -> Result<OutcomeDistribution> {
    let expected = 2 * n;
    let outcomes = expected as usize + 1;
    let mut probs = vec![0.0; outcomes];
    let mut by_split: Vec<Vec<f64>> = (0..outcomes).map(|x| vec![0.0; x + 1]).collect();
    for (occ, amp) in state.iter() {
        if occ.total() != expected {
            return Err(Error::PhotonNumberMismatch {
                expected,
                found: occ.total(),
            });
        }
        let x = (occ.a_h + occ.q_h) as usize;
        let w = amp.norm_sqr();
        probs[x] += w;
        by_split[x][occ.a_h as usize] += w;
    }
    Ok(OutcomeDistribution { probs, by_split })
}

/// The two phase settings alternated in the Holland-Burnett scheme.
pub const HB_SETTINGS: [f64; 2] = [0.0, FRAC_PI_2];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn binom(n: u32, k: u32) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    fn fact(n: u32) -> f64 {
        (1..=n).fold(1.0, |acc, i| acc * i as f64)
    }

    /// Mixing matrix by expanding the transformed creation-operator polynomial.
    fn polynomial_block(n: u32, angle: f64) -> Vec<Vec<f64>> {
        let (s, c) = (0.5 * angle).sin_cos();
        let mut out = vec![vec![0.0; n as usize + 1]; n as usize + 1];
        for m in 0..=n {
            for i in 0..=m {
                for l in 0..=(n - m) {
                    let j = i + l;
                    let coef = binom(m, i)
                        * c.powi(i as i32)
                        * s.powi((m - i) as i32)
                        * binom(n - m, l)
                        * c.powi((n - m - l) as i32)
                        * (-s).powi(l as i32);
                    let norm = (fact(j) * fact(n - j) / (fact(m) * fact(n - m))).sqrt();
                    out[j as usize][m as usize] += coef * norm;
                }
            }
        }
        out
    }

    #[test]
    fn mixing_matches_polynomial_expansion() {
        for angle in [0.0, 0.37, 1.2, PI, -2.1] {
            let mats = MixingMatrices::new(6, angle);
            for n in 0..=6 {
                let oracle = polynomial_block(n, angle);
                for (row, orow) in mats.block(n).iter().zip(&oracle) {
                    for (a, b) in row.iter().zip(orow) {
                        assert_relative_eq!(a, b, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn mixing_blocks_are_orthogonal_at_n20() {
        let mats = MixingMatrices::new(40, 0.83);
        let b = mats.block(40);
        for i in 0..=40 {
            for k in 0..=40 {
                let dot: f64 = (0..=40).map(|j| b[j][i] * b[j][k]).sum();
                let want = if i == k { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12, "({i},{k}) -> {dot}");
            }
        }
    }

    #[test]
    fn hb_input_limits() {
        let indist = build_hb_input(HbConfig::new(1, 0.0).unwrap());
        assert_eq!(indist.len(), 1);
        assert_eq!(indist.amplitude(&ModeOccupation::new(1, 1, 0, 0)).re, 1.0);

        let dist = build_hb_input(HbConfig::new(1, 1.0).unwrap());
        assert_eq!(dist.len(), 1);
        assert_relative_eq!(dist.amplitude(&ModeOccupation::new(1, 0, 0, 1)).re, 1.0);
    }

    #[test]
    fn hb_input_n2_binomial_expansion() {
        // (a_H^+)^2 (sqrt(.75) a_V^+ + .5 q_V^+)^2 / 2 expanded by hand:
        // .75 (a_H^+ a_V^+)^2/2 + 2 sqrt(.75) .5 (a_H^+)^2 a_V^+ q_V^+/2 + .25 (a_H^+ q_V^+)^2/2,
        // each monomial then normalized by sqrt of its occupation factorials.
        let st = build_hb_input(HbConfig::new(2, 0.5).unwrap());
        let amp = |o| st.amplitude(&o).re;
        assert_relative_eq!(amp(ModeOccupation::new(2, 2, 0, 0)), 0.75, epsilon = 1e-14);
        assert_relative_eq!(
            amp(ModeOccupation::new(2, 1, 0, 1)),
            2f64.sqrt() * 0.75f64.sqrt() * 0.5,
            epsilon = 1e-14
        );
        assert_relative_eq!(amp(ModeOccupation::new(2, 1, 0, 1)), 0.61237, epsilon = 1e-5);
        assert_relative_eq!(amp(ModeOccupation::new(2, 0, 0, 2)), 0.25, epsilon = 1e-14);
        assert_relative_eq!(st.norm_sqr(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn hb_config_rejects_bad_input() {
        assert!(HbConfig::new(0, 0.5).is_err());
        assert!(HbConfig::new(2, -0.1).is_err());
        assert!(HbConfig::new(2, 1.5).is_err());
    }

    #[test]
    fn single_photon_full_swap() {
        let st = FockStateVector::basis(ModeOccupation::new(1, 0, 0, 0));
        let out = apply_pair_rotation(&st, ModePair::A, PI);
        assert_relative_eq!(out.amplitude(&ModeOccupation::new(0, 1, 0, 0)).norm(), 1.0, epsilon = 1e-15);
        assert!(out.amplitude(&ModeOccupation::new(1, 0, 0, 0)).norm() < 1e-15);
    }

    #[test]
    fn zero_angle_is_identity() {
        let st = build_hb_input(HbConfig::new(3, 0.4).unwrap());
        let out = apply_pair_rotation(&st, ModePair::A, 0.0);
        for (o, a) in st.iter() {
            assert!((out.amplitude(o) - a).norm() < 1e-15);
        }
        assert_eq!(out.len(), st.len());
    }

    #[test]
    fn quarter_turn_matches_two_photon_state() {
        // cos(phi)|1,1> - sin(phi)(|2,0> - |0,2>)/sqrt2 at phi = pi/2
        let st = FockStateVector::basis(ModeOccupation::new(1, 1, 0, 0));
        let out = apply_pair_rotation(&st, ModePair::A, FRAC_PI_2);
        assert!(out.amplitude(&ModeOccupation::new(1, 1, 0, 0)).norm() < 1e-15);
        let h = out.amplitude(&ModeOccupation::new(2, 0, 0, 0));
        let v = out.amplitude(&ModeOccupation::new(0, 2, 0, 0));
        assert_relative_eq!(h.re, -1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(v.re, 1.0 / 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn evolve_reproduces_two_photon_state() {
        let cfg = HbConfig::new(1, 0.0).unwrap();
        for phi in [0.0, 0.3, 1.1, -0.7] {
            let st = evolve_probe(cfg, phi, 0.0);
            let s2 = 2f64.sqrt();
            assert_relative_eq!(st.amplitude(&ModeOccupation::new(1, 1, 0, 0)).re, phi.cos(), epsilon = 1e-14);
            assert_relative_eq!(st.amplitude(&ModeOccupation::new(2, 0, 0, 0)).re, -phi.sin() / s2, epsilon = 1e-14);
            assert_relative_eq!(st.amplitude(&ModeOccupation::new(0, 2, 0, 0)).re, phi.sin() / s2, epsilon = 1e-14);
        }
        assert_eq!(evolve_probe(cfg, 0.0, 0.0), build_hb_input(cfg));
        let st = evolve_probe(HbConfig::new(2, 0.3).unwrap(), 0.4, FRAC_PI_2);
        assert!((st.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outcome_distribution_examples() {
        let cfg = HbConfig::new(1, 0.0).unwrap();
        let p = outcome_probabilities(&build_hb_input(cfg), 1).unwrap();
        assert_eq!(p.probs, vec![0.0, 1.0, 0.0]);

        let p = outcome_probabilities(&evolve_probe(cfg, FRAC_PI_4, 0.0), 1).unwrap();
        assert_relative_eq!(p.probs[1], 0.5, epsilon = 1e-14);
        assert_relative_eq!(p.probs[0], 0.25, epsilon = 1e-14);
        assert_relative_eq!(p.total(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn outcome_rejects_photon_mismatch() {
        let st = build_hb_input(HbConfig::new(2, 0.3).unwrap());
        assert!(matches!(
            outcome_probabilities(&st, 3),
            Err(Error::PhotonNumberMismatch { expected: 6, found: 4 })
        ));
    }

    #[test]
    fn split_breakdown_sums_to_outcome() {
        let st = evolve_probe(HbConfig::new(3, 0.6).unwrap(), 0.45, 0.0);
        let p = outcome_probabilities(&st, 3).unwrap();
        for (x, parts) in p.by_split.iter().enumerate() {
            assert_relative_eq!(parts.iter().sum::<f64>(), p.probs[x], epsilon = 1e-15);
        }
    }
}
