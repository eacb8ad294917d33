use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("embedding contains a non-finite value")]
    NonFinite,
    #[error("embedding is empty")]
    EmptyEmbedding,
    #[error("invalid time window [{start_s}, {end_s}]")]
    InvalidWindow { start_s: f64, end_s: f64 },
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("malformed backend response: {0}")]
    BadResponse(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("scripted chat diverged at call {call}: {reason}\n--- prompt ---\n{prompt}")]
    ScriptDivergence {
        call: usize,
        reason: String,
        prompt: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SqlError {
    #[error("parse error at position {pos}: {message}")]
    Parse { pos: usize, message: String },
    #[error("unsupported construct at position {pos}: {construct}")]
    Unsupported { pos: usize, construct: String },
    #[error("unknown table '{0}' (only 'objects' exists)")]
    UnknownTable(String),
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("invalid aggregation: {0}")]
    Aggregation(String),
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("unsupported memory version {found} (expected {expected})")]
    Version { found: u64, expected: u64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Sql(#[from] SqlError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("segment {segment}: {source}")]
    SegmentBuild {
        segment: usize,
        #[source]
        source: BackendError,
    },
    #[error("window too long: {requested} captions requested, at most {cap} allowed")]
    WindowCap { requested: usize, cap: usize },
    #[error("segment index {index} out of range (memory has {count} segments)")]
    Range { index: i64, count: usize },
    #[error("unknown tracking id {0}")]
    UnknownTrack(u64),
    #[error("step limit of {0} reached without a final answer")]
    StepLimit(usize),
    #[error("could not parse model output: {0}")]
    Unparsable(String),
    #[error("label {0} outside 0..=4")]
    Label(i64),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("config: {0}")]
    Config(String),
}
