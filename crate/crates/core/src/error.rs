use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("probability {value} outside [0, 1] beyond rounding tolerance")]
    ProbabilityOutOfRange { value: f64 },

    #[error("state holds {found} photons, expected {expected}")]
    PhotonNumberMismatch { expected: u32, found: u32 },

    #[error("count record is empty")]
    EmptyCounts,

    #[error("count record malformed: {0}")]
    MalformedCounts(String),

    #[error("posterior vanishes on every grid node")]
    ZeroPosterior,

    #[error("posterior mass sits on {support} grid nodes; refine the grid before reporting covariances")]
    UnderResolved { support: usize },

    #[error("Fisher matrix is singular: `{parameter}` is not informative")]
    SingularFisher { parameter: &'static str },

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("every phase on the grid gave a singular Fisher matrix")]
    AllSingular,

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::ProbabilityOutOfRange { .. } => "probability_out_of_range",
            Error::PhotonNumberMismatch { .. } => "photon_number_mismatch",
            Error::EmptyCounts => "empty_counts",
            Error::MalformedCounts(_) => "malformed_counts",
            Error::ZeroPosterior => "zero_posterior",
            Error::UnderResolved { .. } => "under_resolved",
            Error::SingularFisher { .. } => "singular_fisher",
            Error::NotPositiveDefinite => "not_positive_definite",
            Error::AllSingular => "all_singular",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
