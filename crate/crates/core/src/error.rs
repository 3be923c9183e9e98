use std::path::PathBuf;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("scenario file is malformed: {0}")]
    ScenarioParse(#[from] toml::de::Error),

    #[error("could not serialize scenario: {0}")]
    ScenarioEmit(#[from] toml::ser::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("scenario failed validation: {0}")]
    Validation(ValidationReport),

    /// No active base station can absorb the demand of a location.
    #[error("location {location} cannot be served{} even with every base station on", interval.map(|t| format!(" at interval {t}")).unwrap_or_default())]
    Infeasible { location: usize, interval: Option<usize> },

    /// A caller broke an operation's precondition.
    #[error("contract violated: {0}")]
    Contract(String),

    #[error("unknown city {0:?}; supply a custom annual total or a profile file")]
    UnknownCity(String),

    #[error("malformed data: {0}")]
    Data(String),

    #[error("enumeration budget exceeded: {needed} states, limit {limit}")]
    Budget { needed: u128, limit: u128 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
