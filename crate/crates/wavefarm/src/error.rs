use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a mathematical precondition (non-positive frequency,
    /// empty sample set, zero-width layer, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A query fell outside the reference maxima a surrogate was built for.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// Malformed data file; `line` is 1-based.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Structurally valid file with inconsistent content (mixed record kinds,
    /// non-monotone frequency grid, version mismatch, ...).
    #[error("schema error: {0}")]
    Schema(String),

    /// Transfer-matrix denominator is numerically singular at a frequency.
    #[error("singular system at omega = {omega} rad/s (condition estimate {cond:.3e})")]
    Singular { omega: f64, cond: f64 },

    /// Training diverged.
    #[error("training aborted at epoch {epoch}: {msg}")]
    TrainAbort { epoch: usize, msg: String },

    /// No admissible point could be produced.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
