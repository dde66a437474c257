use thiserror::Error;

/// Errors raised by the modelling, simulation and identification layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model, table or geometry is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Fixed-step integration would be under-resolved.
    #[error("time step {dt:e} s exceeds the stability limit; dt must be <= {max_dt:e} s")]
    StabilityGuard { dt: f64, max_dt: f64 },

    /// Input carries no information for the requested quantity.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("identification failed: {0}")]
    Identification(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    /// Abscissa is not strictly increasing; `line` is the 1-based line in the source.
    #[error("abscissa not strictly increasing at line {line}")]
    NonMonotone { line: u64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("non-finite values on lines {lines:?}")]
    NonFinite { lines: Vec<u64> },

    #[error("non-positive observations at indices {indices:?} cannot enter log-space residuals")]
    NonPositiveObservation { indices: Vec<usize> },

    #[error("model family {family} cannot be fitted to {kind} data: {reason}")]
    IncompatibleKind {
        family: String,
        kind: String,
        reason: String,
    },

    #[error("fit diverged: residuals are non-finite at every simplex vertex")]
    Divergence,

    #[error("duplicate temperature {0} degC")]
    DuplicateTemperature(f64),

    #[error("need at least 2 datasets at distinct temperatures, got {0}")]
    TooFewDatasets(usize),

    #[error("fit at {temperature_c} degC failed: {source}")]
    FitFailed {
        temperature_c: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
