//! Scenario ingestion: CSV file set → validated [`ScenarioStore`], plus a
//! versioned binary cache for fast reloads.

mod cache;
pub(crate) mod csv_files;
mod manifest;

use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

pub use cache::{read_cache, read_cache_header, write_cache, CacheHeader, CACHE_MAGIC, CACHE_VERSION};
pub use csv_files::load_scenario;
pub use manifest::{ScenarioFiles, ScenarioManifest, DEFAULT_TIMEZONE};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing {role} file: {}", path.display())]
    MissingFile { role: &'static str, path: PathBuf },

    #[error("{file}: schema mismatch: {message}")]
    SchemaMismatch { file: String, message: String },

    #[error("{file}:{line}: malformed value {value:?} in column {column}")]
    MalformedCell { file: String, line: u64, column: String, value: String },

    #[error("{file}{}: time grid error: {message}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    TimeGrid { file: String, line: Option<u64>, message: String },

    #[error("{file}:{line}: value {value} in column {column} out of range ({expected})")]
    Range { file: String, line: u64, column: String, value: f64, expected: &'static str },

    #[error("event order error for agent {agent_id}: {message}")]
    EventOrder { agent_id: String, message: String },

    #[error("scenario has no agents")]
    EmptyScenario,

    #[error("invalid manifest {}: {message}", path.display())]
    InvalidManifest { path: PathBuf, message: String },

    #[error("cache format version {found} is not supported (expected {expected})")]
    CacheVersionMismatch { found: u32, expected: u32 },

    #[error("corrupt cache: {0}")]
    CorruptCache(String),

    #[error("energy checksum mismatch: parsed {parsed} kWh, stored {stored} kWh")]
    ChecksumMismatch { parsed: f64, stored: f64 },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl IngestError {
    pub(crate) fn schema(file: impl Into<String>, message: impl Into<String>) -> Self {
        IngestError::SchemaMismatch { file: file.into(), message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IngestError::Io { path: path.into(), source }
    }

    /// Stable machine-readable error name.
    pub fn kind(&self) -> &'static str {
        match self {
            IngestError::MissingFile { .. } => "MissingFile",
            IngestError::SchemaMismatch { .. } => "SchemaMismatch",
            IngestError::MalformedCell { .. } => "MalformedCell",
            IngestError::TimeGrid { .. } => "TimeGridError",
            IngestError::Range { .. } => "RangeError",
            IngestError::EventOrder { .. } => "EventOrderError",
            IngestError::EmptyScenario => "EmptyScenario",
            IngestError::InvalidManifest { .. } => "InvalidManifest",
            IngestError::CacheVersionMismatch { .. } => "CacheVersionMismatch",
            IngestError::CorruptCache(_) => "CorruptCache",
            IngestError::ChecksumMismatch { .. } => "ChecksumMismatch",
            IngestError::Io { .. } => "IoError",
        }
    }

    /// `false` for failures of the environment rather than the data.
    pub fn is_validation(&self) -> bool {
        !matches!(self, IngestError::Io { .. })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({ "kind": self.kind(), "message": self.to_string() });
        let obj = v.as_object_mut().expect("object");
        match self {
            IngestError::SchemaMismatch { file, .. } => {
                obj.insert("file".into(), json!(file));
            }
            IngestError::MalformedCell { file, line, column, .. } => {
                obj.insert("file".into(), json!(file));
                obj.insert("row".into(), json!(line));
                obj.insert("column".into(), json!(column));
            }
            IngestError::TimeGrid { file, line, .. } => {
                obj.insert("file".into(), json!(file));
                obj.insert("row".into(), json!(line));
            }
            IngestError::Range { file, line, column, value, .. } => {
                obj.insert("file".into(), json!(file));
                obj.insert("row".into(), json!(line));
                obj.insert("column".into(), json!(column));
                obj.insert("value".into(), json!(value));
            }
            IngestError::EventOrder { agent_id, .. } => {
                obj.insert("agent_id".into(), json!(agent_id));
            }
            IngestError::MissingFile { path, .. } | IngestError::InvalidManifest { path, .. } | IngestError::Io { path, .. } => {
                obj.insert("path".into(), json!(path.display().to_string()));
            }
            _ => {}
        }
        v
    }
}

/// Load either a cache file or a manifest, detected by the cache magic bytes.
pub fn load_any(path: &std::path::Path) -> Result<crate::ScenarioStore, IngestError> {
    if cache::is_cache_file(path) {
        read_cache(path)
    } else {
        load_scenario(&ScenarioManifest::from_file(path)?)
    }
}
