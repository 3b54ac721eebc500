//! Phase and visibility estimation for two-photon N00N interferometry, with
//! Fisher-information tools for Holland-Burnett probes.

pub mod bayes;
pub mod diff;
pub mod error;
pub mod fisher;
pub mod fock;
pub mod hb;
pub mod io;
pub mod matrix;
pub mod noon;

pub use bayes::{
    bayes_update, checked_moments, estimate_joint, estimate_single_param, moments, sample_counts, CountRecord,
    EstimateSummary, GridOptions, PosteriorGrid, PriorSpec, SamplingMode,
};
pub use error::{Error, Result};
pub use fisher::{crb, fisher_full, fisher_postselected, lrt_statistic, CrbReport, FisherMatrix2, LrtForm, PsConvention};
pub use fock::{FockStateVector, HbConfig, ModeOccupation};
pub use hb::{fisher_hb, scaling_sweep, upsilon, HbFisherPoint, ScalingPoint, StepSpec};
pub use matrix::Sym2;
pub use noon::{ModelPoint, CANONICAL_SETTINGS};
