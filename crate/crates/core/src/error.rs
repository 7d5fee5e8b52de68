use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("coupling parameter undefined: tunnel coupling H is zero")]
    CouplingUndefined,

    #[error("record does not match the integration grid: {0}")]
    RecordMismatch(String),

    #[error("state is not pure enough for a deterministic pulse (purity {0})")]
    MixedState(f64),

    #[error("purification requires an ideal detector (gamma_d_extra = {0}); extra dephasing caps the reachable purity")]
    NonidealDetector(f64),

    #[error("empty record")]
    EmptyRecord,

    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
