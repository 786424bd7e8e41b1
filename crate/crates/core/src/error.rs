use thiserror::Error;

/// Everything that can go wrong in the library.
///
/// Variants are grouped by [`ErrorKind`] so that front ends can map a failure
/// either to "the request was malformed" or to "a numerical contract broke".
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interferometer spec: {0}")]
    InvalidSpec(String),
    #[error("overlap_time: no overlap time exists when alpha_i = 0")]
    NoOverlapTime,
    #[error("overlap_time: overlap time {0} is negative (alpha_r/alpha_i must be <= 0)")]
    NonphysicalTime(f64),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("singular geometry: site at {site} m reaches the source at {distance} m")]
    SingularGeometry { site: f64, distance: f64 },
    #[error("bisection bracket: {0}")]
    Bracket(String),
    #[error("configuration: {0}")]
    Configuration(String),
    #[error("truncation invalid: eta = {eta:e} exceeds tolerance {tolerance:e}")]
    TruncationInvalid { eta: f64, tolerance: f64 },
    #[error("sampling: {0}")]
    Sampling(String),
    #[error("empty data")]
    EmptyData,
    #[error("fringe fit failed: {0}")]
    Fit(String),
    #[error("grid resolution: {0}")]
    Resolution(String),
    #[error("step size: {0}")]
    StepSize(String),
    #[error("grid alignment: {0}")]
    Alignment(String),
    #[error("capacity: {devices} devices exceeds the dense limit of {limit}")]
    Capacity { devices: usize, limit: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Inputs violate a precondition.
    Config,
    /// A numerical contract was violated while computing.
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            InvalidSpec(_) | NoOverlapTime | NonphysicalTime(_) | InvalidGrid(_)
            | OutOfRange(_) | SingularGeometry { .. } | Configuration(_) | EmptyData
            | Resolution(_) | Alignment(_) | Capacity { .. } => ErrorKind::Config,
            Bracket(_) | TruncationInvalid { .. } | Sampling(_) | Fit(_) | StepSize(_)
            | InvalidState(_) => ErrorKind::Numerical,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
