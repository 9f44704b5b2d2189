//! File formats, dataset building, and reporting around `trbench-core`:
//! annotation/prediction JSON, the `.fseq` frame container, benchmark
//! manifests with checksums, SVG/CSV report rendering, and the synthetic
//! training task orchestration used by the `bench` binary.

pub mod annotations;
pub mod fseq;
pub mod manifest;
pub mod model_io;
pub mod report;
pub mod svg;
pub mod toy;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("validation: {0}")]
    Validation(trbench_core::types::ValidationError),
    #[error("corruption: {0}")]
    Corrupt(trbench_core::corrupt::CorruptError),
    #[error("metrics: {0}")]
    Metrics(trbench_core::metrics::MetricsError),
    #[error("training: {0}")]
    Train(trbench_core::train::trainer::TrainError),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Format { path: path.into(), message: message.into() }
    }

    /// True for bad-input errors (exit 1); false for runtime failures
    /// (exit 2).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Self::Train(_))
    }
}

impl From<trbench_core::types::ValidationError> for Error {
    fn from(e: trbench_core::types::ValidationError) -> Self {
        Self::Validation(e)
    }
}

impl From<trbench_core::corrupt::CorruptError> for Error {
    fn from(e: trbench_core::corrupt::CorruptError) -> Self {
        Self::Corrupt(e)
    }
}

impl From<trbench_core::metrics::MetricsError> for Error {
    fn from(e: trbench_core::metrics::MetricsError) -> Self {
        Self::Metrics(e)
    }
}

impl From<trbench_core::train::trainer::TrainError> for Error {
    fn from(e: trbench_core::train::trainer::TrainError) -> Self {
        Self::Train(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
