use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error("unsupported gesture {0:?}")]
    UnsupportedGesture(String),
    #[error("unsupported aoi {0:?}")]
    UnsupportedAoi(String),
    #[error("malformed sequence id {0:?}")]
    InvalidSequenceId(String),
}

/// Failure to turn one log line into a typed record.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: malformed record: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unsupported record type {tag:?}")]
    UnsupportedRecord { line: usize, tag: String },
    #[error("line {line}: schema error on field `{field}`: {message}")]
    Schema {
        line: usize,
        field: &'static str,
        message: String,
    },
    #[error("line {line}: unsupported gesture {value:?}")]
    UnsupportedGesture { line: usize, value: String },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::UnsupportedRecord { line, .. }
            | ParseError::Schema { line, .. }
            | ParseError::UnsupportedGesture { line, .. } => *line,
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("concept database {path}: {message}")]
    Concept { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractionError {
    #[error("invalid recording: {0}")]
    InvalidRecording(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("no metric value for sequence {0}")]
    IncompleteMetrics(String),
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Rejected analysis or comparison request.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error("unknown flow {0}")]
    UnknownFlow(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("unknown sequence {0}")]
    Unknown(String),
    #[error("sequence {id} belongs to snapshot {snapshot_id}, current is {current}")]
    Stale {
        id: String,
        snapshot_id: u64,
        current: u64,
    },
}
