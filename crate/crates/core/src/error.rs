use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while loading or validating configuration files.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },
    #[error("invalid {what}: {}", .violations.join("; "))]
    Invalid {
        what: String,
        violations: Vec<String>,
    },
}

impl ConfigError {
    pub(crate) fn invalid(what: &str, violations: Vec<String>) -> Self {
        ConfigError::Invalid {
            what: what.to_string(),
            violations,
        }
    }

    pub(crate) fn parse(what: &str, err: impl std::fmt::Display) -> Self {
        ConfigError::Parse {
            what: what.to_string(),
            message: err.to_string(),
        }
    }
}

/// Lookup failures against a validated platform.
#[derive(Debug, Error, PartialEq)]
pub enum PlatformError {
    #[error("unknown PE id {0}")]
    UnknownPe(usize),
    #[error("unknown cluster id {0}")]
    UnknownCluster(usize),
    #[error("unknown task type {0}")]
    UnknownTaskType(usize),
    #[error("task type {task_type} is not supported on cluster {cluster}")]
    Unsupported { task_type: usize, cluster: usize },
}

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("cycle detected in DFG `{0}`")]
    Cycle(String),
    #[error("scenario mix is empty")]
    EmptyMix,
    #[error("unknown application id {0}")]
    UnknownApp(usize),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("task type {task_type} of task {task} has no schedulable PE")]
    NoSchedulablePe { task: usize, task_type: usize },
    #[error("event cap of {0} events exceeded")]
    EventCapExceeded(u64),
    #[error("simulation ended with {0} unfinished tasks")]
    Incomplete(usize),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("tree references feature index {index} but the snapshot has {width} features")]
    MissingFeature { index: usize, width: usize },
    #[error("sample set is empty")]
    EmptySamples,
    #[error("sample set contains a single class")]
    SingleClass,
    #[error("unresolved pending label in sample {0}")]
    Pending(usize),
    #[error("tree file schema version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("malformed tree: {0}")]
    Malformed(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<SimError>,
    },
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("trace contains no completed jobs")]
    EmptyTrace,
    #[error("zero denominator in comparison")]
    ZeroDenominator,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}
