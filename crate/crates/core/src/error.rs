use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no data")]
    NoData,
    #[error("no events")]
    NoEvents,
    #[error("one arm missing")]
    OneArmMissing,
    #[error("invalid record {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },
    #[error("line {line}: {reason}")]
    Csv { line: u64, reason: String },
    #[error("invalid weight specification: {0}")]
    InvalidWeight(String),
    #[error("degenerate variance")]
    DegenerateVariance,
    #[error("correlation {0} outside [-1, 1]")]
    InvalidCorrelation(f64),
    #[error("invalid combo specification: {0}")]
    InvalidCombo(String),
    #[error("critical value search failed")]
    CriticalValueSearchFailed,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("unknown scenario `{name}`; valid names: {valid}")]
    UnknownScenario { name: String, valid: String },
    #[error("invalid harness configuration: {0}")]
    InvalidHarness(String),
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("scenario `{0}` missing from operating characteristics")]
    MissingScenario(String),
    #[error("method `{0}` not found")]
    MissingMethod(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical kernels rather than of the input data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateVariance | Error::CriticalValueSearchFailed | Error::InvalidCorrelation(_)
        )
    }
}
