use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("no row survived validation ({dropped} rows with missing fields)")]
    AllRowsInvalid { dropped: usize },

    #[error("row {row}: truncation condition u <= x <= v violated (x={x}, u={u}, v={v})")]
    TruncationViolation { row: usize, x: f64, u: f64, v: f64 },

    #[error("row {row}: non-finite value")]
    NonFinite { row: usize },

    #[error("weight {index} is negative or not finite ({value})")]
    NegativeWeight { index: usize, value: f64 },

    #[error("length mismatch: {points} points but {weights} weights")]
    LengthMismatch { points: usize, weights: usize },

    #[error("total weight is zero")]
    ZeroMass,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("NPMLE weights degenerate at iteration {iteration} ({} rows affected)", indices.len())]
    DegenerateWeights { iteration: usize, indices: Vec<usize> },

    #[error("NPMLE did not converge in {iterations} iterations (last change {final_delta:e})")]
    MaxIterationsExceeded { iterations: usize, final_delta: f64 },

    #[error("NPMLE is not unique: coverage graph has {components} components")]
    NonUnique { components: usize },

    #[error("fit has not converged")]
    NotConverged,

    #[error("NPMLE of the original sample could not be computed: {0}")]
    OriginalFitFailed(Box<Error>),

    #[error("all {requested} bootstrap replicates failed")]
    AllReplicatesFailed { requested: usize },

    #[error("x = {x} outside (0, 1)")]
    DomainError { x: f64 },

    #[error("unsupported target law Beta({a}, {b})")]
    UnsupportedLaw { a: f64, b: f64 },

    #[error("all {trials} Monte Carlo trials were discarded")]
    AllTrialsDiscarded { trials: usize },

    #[error("{0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Format(String),
}

impl Error {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyInput => "EmptyInput",
            Error::AllRowsInvalid { .. } => "AllRowsInvalid",
            Error::TruncationViolation { .. } => "TruncationViolation",
            Error::NonFinite { .. } => "NonFinite",
            Error::NegativeWeight { .. } => "NegativeWeight",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::ZeroMass => "ZeroMass",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::DegenerateWeights { .. } => "DegenerateWeights",
            Error::MaxIterationsExceeded { .. } => "MaxIterationsExceeded",
            Error::NonUnique { .. } => "NonUnique",
            Error::NotConverged => "NotConverged",
            Error::OriginalFitFailed(_) => "OriginalFitFailed",
            Error::AllReplicatesFailed { .. } => "AllReplicatesFailed",
            Error::DomainError { .. } => "DomainError",
            Error::UnsupportedLaw { .. } => "UnsupportedLaw",
            Error::AllTrialsDiscarded { .. } => "AllTrialsDiscarded",
            Error::Io(_) => "IoError",
            Error::Format(_) => "FormatError",
        }
    }

    /// True when the failure comes from the estimation stage rather than
    /// from the input.
    pub fn is_estimation_failure(&self) -> bool {
        matches!(
            self,
            Error::DegenerateWeights { .. }
                | Error::MaxIterationsExceeded { .. }
                | Error::NonUnique { .. }
                | Error::NotConverged
                | Error::OriginalFitFailed(_)
                | Error::AllReplicatesFailed { .. }
                | Error::AllTrialsDiscarded { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
