//! Error type shared by all simulation modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("tensor factors share space name `{0}`")]
    OverlappingSpaces(String),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation undefined on the zero vector")]
    ZeroVector,

    #[error("coupling strength {0} rad exceeds the physical waveplate range |g| <= pi/2")]
    UnphysicalCoupling(f64),

    #[error("pre- and post-selected states are orthogonal; weak value undefined")]
    OrthogonalPostselection,

    #[error("post-selection succeeds with probability 0")]
    PostselectionFailure,

    #[error("weak values were computed from different pre/post states")]
    MismatchedStates,

    #[error("path observables do not sum to the identity (max deviation {0:.3e})")]
    IncompletePathSet(f64),

    #[error("transmission {0} outside [0, 1]")]
    InvalidTransmission(f64),

    #[error("indistinguishability {0} outside [0, 1]")]
    InvalidIndistinguishability(f64),

    #[error("input state has support on a loss arm")]
    InputOnLossArm,

    #[error("unknown analyzer basis `{0}`")]
    UnknownBasis(String),

    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),

    #[error("exact curve undefined: post-selection probability 0 at g = {0}")]
    CurveUndefined(f64),

    #[error("need at least {needed} points for degree {degree}, got {got}")]
    InsufficientData {
        needed: usize,
        got: usize,
        degree: usize,
    },

    #[error("design matrix is rank deficient (duplicate abscissae?)")]
    RankDeficient,

    #[error("fit sigmas must be positive (sigma[{0}] = {1})")]
    NonPositiveSigma(usize, f64),

    #[error("slope undefined for a degree-0 fit")]
    DegreeTooLow,

    #[error("sweep is missing required setting: {0}")]
    MissingSetting(String),

    #[error("csv parse error at row {row}: {message}")]
    CsvParse { row: usize, message: String },
}

impl CoreError {
    /// `true` for errors that describe a domain condition (as opposed to
    /// malformed input or I/O); the CLI maps these to exit code 2.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            CoreError::OrthogonalPostselection
                | CoreError::PostselectionFailure
                | CoreError::MissingSetting(_)
                | CoreError::IncompletePathSet(_)
                | CoreError::CurveUndefined(_)
        )
    }
}
