//! Error types shared across the pipeline.

use std::path::PathBuf;

/// Pipeline stage names used to label failures in multi-stage runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Detection,
    MaskTracking,
    Summary,
    InstanceCaption,
    PredicateExtraction,
    SynsetAlignment,
    Evaluation,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Detection => "detection",
            Stage::MaskTracking => "mask-tracking",
            Stage::Summary => "summary",
            Stage::InstanceCaption => "instance-caption",
            Stage::PredicateExtraction => "predicate-extraction",
            Stage::SynsetAlignment => "synset-alignment",
            Stage::Evaluation => "evaluation",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("{stage} stage failed at frame {frame}: {source} (active identities: {identities:?})")]
    Stage {
        stage: Stage,
        frame: usize,
        identities: Vec<u32>,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage} stage failed: {source}")]
    StageOther {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("backend ({role}) error: {message}")]
    Backend { role: &'static str, message: String },

    #[error("backend response violates expected schema: {reason}; raw payload: {raw}")]
    SchemaViolation { reason: String, raw: String },

    #[error("{path}: {reason}")]
    Data { path: PathBuf, reason: String },

    #[error("{path}:{line}: {reason}")]
    Record {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("validation failed: {0}")]
    Validation(String),
}

impl Error {
    pub fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub fn backend(role: &'static str, message: impl Into<String>) -> Self {
        Error::Backend {
            role,
            message: message.into(),
        }
    }

    pub fn data(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Data {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn record(path: impl Into<PathBuf>, line: usize, reason: impl Into<String>) -> Self {
        Error::Record {
            path: path.into(),
            line,
            reason: reason.into(),
        }
    }

    /// Wrap an error with the stage and frame context it occurred in.
    pub fn at_stage(self, stage: Stage, frame: usize, identities: Vec<u32>) -> Self {
        Error::Stage {
            stage,
            frame,
            identities,
            source: Box::new(self),
        }
    }

    pub fn in_stage(self, stage: Stage) -> Self {
        Error::StageOther {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
