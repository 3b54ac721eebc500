use std::f64::consts::PI;

use noonmetry::bayes::{estimate_joint, expected_counts, sample_counts, GridOptions, SamplingMode};
use noonmetry::fisher::{crb, fisher_full, fisher_postselected, weighted_postselected, PsConvention};
use noonmetry::fock::{apply_pair_rotation, build_hb_input, outcome_probabilities, HbConfig, ModePair};
use noonmetry::hb::{fisher_hb, hb_probabilities, StepSpec};
use noonmetry::io::{parse_counts_csv, write_counts_csv};
use noonmetry::noon::{ModelPoint, CANONICAL_SETTINGS};
use proptest::prelude::*;

fn pt(phi: f64, v: f64) -> ModelPoint {
    ModelPoint::new(phi, v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotations_preserve_norm(n in 1u32..7, eps in 0.0f64..=1.0, a in -7.0f64..7.0, b in -7.0f64..7.0) {
        let state = build_hb_input(HbConfig::new(n, eps).unwrap());
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        let out = apply_pair_rotation(&apply_pair_rotation(&state, ModePair::A, a), ModePair::Q, b);
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
        prop_assert_eq!(out.photon_number(), Some(2 * n));
    }

    #[test]
    fn rotation_inverse_restores_state(n in 1u32..6, eps in 0.0f64..=1.0, a in -7.0f64..7.0) {
        let state = build_hb_input(HbConfig::new(n, eps).unwrap());
        let back = apply_pair_rotation(&apply_pair_rotation(&state, ModePair::A, a), ModePair::A, -a);
        for (occ, amp) in back.iter() {
            prop_assert!((amp - state.amplitude(occ)).norm() < 1e-10);
        }
    }

    #[test]
    fn hb_distributions_normalized(n in 1u32..8, eps in 0.0f64..=1.0, phi in -4.0f64..4.0, s in 0usize..2) {
        let setting = [0.0, PI / 2.0][s];
        let d = hb_probabilities(n, eps, phi, setting).unwrap();
        prop_assert_eq!(d.probs.len(), 2 * n as usize + 1);
        prop_assert!(d.probs.iter().all(|&p| p >= 0.0));
        prop_assert!((d.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hb_distribution_is_pi_periodic(n in 1u32..6, eps in 0.0f64..=1.0, phi in -4.0f64..4.0) {
        let a = hb_probabilities(n, eps, phi, 0.0).unwrap();
        let b = hb_probabilities(n, eps, phi + PI, 0.0).unwrap();
        for (x, y) in a.probs.iter().zip(&b.probs) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn fisher_matrices_are_psd(phi in -4.0f64..4.0, v in 0.01f64..0.999) {
        let point = pt(phi, v);
        let ps = fisher_postselected(point, &CANONICAL_SETTINGS, PsConvention::PerEvent);
        let full = fisher_full(point, &CANONICAL_SETTINGS);
        prop_assert!(ps.is_psd(1e-12 * ps.entries.trace()));
        prop_assert!(full.is_psd(1e-12 * full.entries.trace()));
        prop_assert!(ps.xi().abs() <= 1.0 + 1e-12);
        let w = weighted_postselected(point, &CANONICAL_SETTINGS);
        prop_assert!(full.entries.sub(&w.entries).eigenvalues()[0] >= -1e-12 * full.entries.trace());
    }

    #[test]
    fn setting_averaged_is_a_quarter(phi in -4.0f64..4.0, v in 0.01f64..0.999) {
        let point = pt(phi, v);
        let a = fisher_postselected(point, &CANONICAL_SETTINGS, PsConvention::PerEvent).entries;
        let b = fisher_postselected(point, &CANONICAL_SETTINGS, PsConvention::SettingAveraged).entries;
        prop_assert!((a.scale(0.25).xx - b.xx).abs() <= 1e-15 * a.xx.abs().max(1.0));
        prop_assert!((a.scale(0.25).yy - b.yy).abs() <= 1e-15 * a.yy.abs().max(1.0));
    }

    #[test]
    fn effective_information_below_diagonal(n in 1u32..5, eps in 0.05f64..0.95, phi in 0.05f64..3.1) {
        let p = fisher_hb(n, eps, phi, &StepSpec { convergence_check: false, ..StepSpec::default() }).unwrap();
        let f = p.fisher.entries;
        if let (Some(a), Some(b)) = (p.eff_phi, p.eff_eps) {
            prop_assert!(a >= 0.0 && a <= f.xx * (1.0 + 1e-9));
            prop_assert!(b >= 0.0 && b <= f.yy * (1.0 + 1e-9));
        }
    }
}

#[test]
fn outcome_marginals_match_n1_closed_form() {
    // one photon per input: the coincidence probability is the split x = 1
    let state = build_hb_input(HbConfig::new(1, 0.0).unwrap());
    let rotated = apply_pair_rotation(&apply_pair_rotation(&state, ModePair::A, 0.8), ModePair::Q, 0.8);
    let d = outcome_probabilities(&rotated, 1).unwrap();
    assert!((d.probs[1] - 0.8f64.cos().powi(2)).abs() < 1e-14);
}

#[test]
fn csv_round_trip_then_estimate() {
    let point = pt(0.3, 0.98);
    let counts = sample_counts(point, 70_000, 17, SamplingMode::Postselected).unwrap();
    let parsed = parse_counts_csv(&write_counts_csv(&counts, &[])).unwrap();
    assert_eq!(parsed.digest(), counts.digest());
    let (_, est) = estimate_joint(&parsed, &GridOptions::default()).unwrap();
    assert!((est.phi - 0.3).abs() < 3.0 * est.cov.xx.sqrt());
    assert!((est.v - 0.98).abs() < 3.0 * est.cov.yy.sqrt());
}

#[test]
fn noiseless_posterior_width_tracks_the_bound() {
    let point = pt(0.3, 0.98);
    let counts = expected_counts(point, 70_000).unwrap();
    let (_, est) = estimate_joint(&counts, &GridOptions::default()).unwrap();
    let bound = crb(&fisher_postselected(point, &CANONICAL_SETTINGS, PsConvention::PerEvent), 70_000.0)
        .unwrap()
        .bound;
    assert!((est.cov.xx / bound.xx - 1.0).abs() < 0.05);
    assert!((est.cov.yy / bound.yy - 1.0).abs() < 0.05);
}
