use thiserror::Error;

/// Errors raised by the library. Variants map onto the CLI exit codes:
/// validation problems exit with 2, numerical non-convergence with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time {0} is not a node of the grid")]
    NotAGridNode(f64),

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Shape(_)
            | Error::InvalidArgument(_)
            | Error::NotAGridNode(_)
            | Error::Config(_) => 2,
            Error::NonConvergence(_) | Error::NonFinite(_) => 3,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
