use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the library.
///
/// The first group are precondition violations (bad parameters, windows that
/// leave a regime). The second group are runtime outcomes of a numerical
/// procedure that was correctly invoked.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("interval [{lo}, {hi}] straddles the regime boundary at {boundary}")]
    Straddle { lo: f64, hi: f64, boundary: f64 },

    #[error("regime error: {0}")]
    Regime(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("length error: path has {len} steps but burn-in is {burn_in}")]
    Length { len: usize, burn_in: usize },

    #[error("no periodic orbit found for lambda = {lambda} within {max_iter} iterations")]
    NoConvergence { lambda: f64, max_iter: usize },

    #[error("period mismatch at lambda = {lambda}: expected {expected}, detected {detected}")]
    PeriodMismatch {
        lambda: f64,
        expected: usize,
        detected: usize,
    },

    #[error("expected 4 real roots of H, found {found}")]
    RootCount { found: usize },

    #[error("ordering violated: {0}")]
    Ordering(String),

    #[error("empty peak: {0}")]
    EmptyPeak(String),

    #[error("ensemble did not converge after {generations} generations")]
    NotConverged { generations: u64 },

    #[error("no period-{period} window found: {reason}")]
    WindowNotFound { period: usize, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True when the error is a violated precondition rather than a failure
    /// of a numerical procedure.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Straddle { .. }
                | Error::Regime(_)
                | Error::Size(_)
                | Error::Length { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
