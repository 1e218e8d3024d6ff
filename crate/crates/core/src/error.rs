use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("insufficient data: {needed} usable rows needed, {available} available")]
    InsufficientData { needed: usize, available: usize },

    #[error("design matrix is singular or rank deficient")]
    SingularDesign,

    #[error("regression fits the data exactly; residual variance is zero")]
    DegenerateFit,

    #[error("sample is constant")]
    DegenerateSample,

    #[error("no pre-bound normal reaches the target moments: {0}")]
    InfeasibleTarget(String),

    #[error("moment match is numerically singular: standardized bound {z_c:.3} is beyond ±{limit}")]
    NearSingular { z_c: f64, limit: f64 },

    #[error("bound is unreachable: tail mass below {0:e}")]
    UnreachableBound(f64),

    #[error("optimizer did not converge after {iterations} iterations: {reason}")]
    NonConvergence { iterations: usize, reason: String },

    #[error("imputation method failed: {0}")]
    MethodFailure(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
