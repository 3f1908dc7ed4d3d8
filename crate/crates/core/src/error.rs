use thiserror::Error;

/// Errors raised by the library. Variants split into input problems
/// ([`Error::is_validation`]) and runtime failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid event data: {0}")]
    InvalidEventData(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension index {index} out of range for p = {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("explosive parameters: spectral radius of alpha/beta is {radius:.6} (must be < 1)")]
    Explosive { radius: f64 },

    #[error("simulation exceeded the safety cap of {cap} events")]
    EventCap { cap: usize },

    #[error("no stationary parameter draw after {attempts} attempts")]
    NoStationaryDraw { attempts: usize },

    #[error("infeasible point: intensity is zero at an event of dimension {dim}")]
    Infeasible { dim: usize },

    #[error("complexity cache is missing {} key(s): {}", .missing.len(), .missing.join(", "))]
    CacheMiss { missing: Vec<String> },

    #[error("empty model space for dimension {dim}")]
    EmptyModelSpace { dim: usize },

    #[error("{failed} of {total} inner fits failed to converge (limit is 1%)")]
    TooManyFailures { failed: usize, total: usize },

    #[error("cannot read {path}: {source}")]
    Input {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a failing computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidEventData(_)
                | Error::InvalidParams(_)
                | Error::InvalidConfig(_)
                | Error::InvalidSeries(_)
                | Error::DimensionMismatch { .. }
                | Error::IndexOutOfRange { .. }
                | Error::Explosive { .. }
                | Error::CacheMiss { .. }
                | Error::EmptyModelSpace { .. }
                | Error::Input { .. }
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
