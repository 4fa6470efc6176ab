use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("the activation LP has no feasible basis")]
    InfeasibleInstance,

    #[error("basis {0} has a singular basic matrix")]
    SingularBasis(String),

    #[error("basis {0} is not optimal for the given means")]
    NotOptimalBasis(String),

    #[error("activation probabilities are not exact rationals")]
    NonRationalProbabilities,

    #[error("invalid number {0:?}")]
    ParseNumber(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "budget violation at period {period}: activating bandit {bandit} drives resource {resource} slack to {slack}"
    )]
    BudgetViolation {
        period: u64,
        bandit: usize,
        resource: usize,
        slack: String,
    },

    #[error("initial sampling block cannot be ordered feasibly")]
    InfeasibleIsb,

    #[error("no prefix-feasible ordering exists for block counts {0:?}")]
    InfeasibleOrdering(Vec<u64>),

    #[error("bandit {bandit} needs at least {needed} samples, has {have}")]
    InsufficientSamples { bandit: usize, needed: u64, have: u64 },

    #[error("horizon {horizon} is shorter than the initial sampling block ({isb})")]
    HorizonTooShort { horizon: u64, isb: u64 },

    #[error("reduced cost of bandit {bandit} differs across optimal bases: {values:?}")]
    AmbiguousPhi { bandit: usize, values: Vec<String> },

    #[error("replication {rep} (seed {seed}) failed: {source}")]
    Replication {
        rep: u64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Process exit status used by the command-line tool: 2 for bad input
    /// (config, instance, files), 3 for a budget violation, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Replication { source, .. } => source.exit_code(),
            Error::BudgetViolation { .. } => 3,
            Error::InvalidInstance(_)
            | Error::ParseNumber(_)
            | Error::Config(_)
            | Error::Io { .. }
            | Error::Json { .. }
            | Error::HorizonTooShort { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
