use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter at step {step}: {reason}")]
    InvalidParam { step: usize, reason: String },

    #[error("stage {stage} out of range (have {available})")]
    StageOutOfRange { stage: usize, available: usize },

    #[error(
        "ill-posed construction at step ({n},{m}): {what} is zero; \
         criterion q_n > max(p_n, q'_0, ..., q'_(n-1)) fails"
    )]
    IllPosed { n: usize, m: usize, what: String },

    #[error("{0} is too large to enumerate")]
    TooLarge(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("sampling budget exhausted after {0} attempts")]
    SamplingBudget(usize),

    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    #[error("class generator cannot reach the requested floor: {0}")]
    Unreachable(String),

    #[error("construction invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParam { .. } => "invalid-param",
            Error::StageOutOfRange { .. } => "stage-out-of-range",
            Error::IllPosed { .. } => "ill-posed",
            Error::TooLarge(_) => "too-large",
            Error::Input(_) => "input",
            Error::SamplingBudget(_) => "sampling-budget",
            Error::SearchExhausted(_) => "search-exhausted",
            Error::Unreachable(_) => "unreachable",
            Error::Invariant(_) => "invariant",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
