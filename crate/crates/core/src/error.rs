use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("{what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("step violates the stability guard ({detail}); reduce dt")]
    StabilityGuard { detail: String },

    #[error("frequency schedule is empty")]
    EmptySchedule,

    #[error("frequency schedule is discontinuous at segment {index}: ensemble is at omega={current}, segment starts at omega={start} (use an explicit jump)")]
    ScheduleDiscontinuity { index: usize, current: f64, start: f64 },

    #[error("binomial hypergeometric sum refused for n={n} (limit {limit}); use theta quadrature")]
    OrderTooLarge { n: usize, limit: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("no snapshots to write")]
    EmptyTimeseries,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }
}
