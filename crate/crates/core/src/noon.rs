//! Closed-form detection model for the two-photon experiment.
//!
//! A setting is the half-wave-plate angle `theta`; the fringes depend on
//! `8 theta - 2 phi`. Each setting is a three-outcome measurement: one
//! coincidence (`p1`) and two bunched outcomes (`p2` each).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rounding slack allowed before a probability is treated as out of range.
const UNIT_GUARD: f64 = 1e-12;

/// The four wave-plate angles used in the experiment.
pub const CANONICAL_SETTINGS: [f64; 4] = [0.0, PI / 16.0, PI / 8.0, 3.0 * PI / 16.0];

/// Phase and fringe visibility under estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub phi: f64,
    pub v: f64,
}

impl ModelPoint {
    pub fn new(phi: f64, v: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(Error::invalid("phi", "phase must be finite"));
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid("v", format!("visibility {v} outside [0, 1]")));
        }
        Ok(ModelPoint { phi, v })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProbabilities {
    /// Coincidence between the two arms.
    pub p1: f64,
    /// Two photons in one given arm.
    pub p2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Indistinguishable,
    Distinguishable,
}

pub(crate) fn guarded_unit(x: f64) -> Result<f64> {
    if !(-UNIT_GUARD..=1.0 + UNIT_GUARD).contains(&x) || x.is_nan() {
        return Err(Error::ProbabilityOutOfRange { value: x });
    }
    Ok(x.clamp(0.0, 1.0))
}

/// `cos(8 theta - 2 phi)`, the fringe term shared by every probability.
#[inline]
pub fn fringe(theta: f64, phi: f64) -> f64 {
    (8.0 * theta - 2.0 * phi).cos()
}

pub fn probs_full(theta: f64, point: ModelPoint) -> Result<OutcomeProbabilities> {
    let v = point.v;
    let c = fringe(theta, point.phi);
    let s2 = (4.0 * theta - point.phi).sin().powi(2);
    Ok(OutcomeProbabilities {
        p1: guarded_unit((1.0 + v * c) / (1.0 + v))?,
        p2: guarded_unit(v * s2 / (1.0 + v))?,
    })
}

/// Probability that a retained coincidence came from setting `theta`.
/// Normalized over [`CANONICAL_SETTINGS`].
pub fn prob_postselected(theta: f64, point: ModelPoint) -> Result<f64> {
    guarded_unit(0.25 * (1.0 + point.v * fringe(theta, point.phi)))
}

pub fn limit_probs(theta: f64, phi: f64, regime: Regime) -> Result<OutcomeProbabilities> {
    let c = fringe(theta, phi);
    let s2 = (4.0 * theta - phi).sin().powi(2);
    let (p1, p2) = match regime {
        Regime::Indistinguishable => (0.5 * (1.0 + c), 0.5 * s2),
        Regime::Distinguishable => (0.25 * (3.0 + c), 0.25 * s2),
    };
    Ok(OutcomeProbabilities {
        p1: guarded_unit(p1)?,
        p2: guarded_unit(p2)?,
    })
}

pub fn visibility_from_distinguishability(epsilon: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid(
            "epsilon",
            format!("distinguishability {epsilon} outside [0, 1]"),
        ));
    }
    let e2 = epsilon * epsilon;
    Ok((2.0 - e2) / (2.0 + e2))
}

/// `dv/d(epsilon)` for the visibility relation above.
pub fn visibility_jacobian(epsilon: f64) -> f64 {
    let d = 2.0 + epsilon * epsilon;
    -8.0 * epsilon / (d * d)
}

/// Post-selected probability with the visibility pinned to a calibration value.
pub fn prob_single_param(theta: f64, phi: f64, v0: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v0) {
        return Err(Error::invalid("v0", format!("visibility {v0} outside [0, 1]")));
    }
    guarded_unit(0.25 * (1.0 + v0 * fringe(theta, phi)))
}
