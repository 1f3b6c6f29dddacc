// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised while building or evaluating a design.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("block `{block}` has no PPA entry for technology `{tech}`")]
    MissingPpa { block: String, tech: String },
    #[error("structure error: {0}")]
    Structure(String),
    #[error("state error: {0}")]
    State(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("infeasible input: {0}")]
    Infeasible(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
}

/// Errors raised while reading design or result files.
#[derive(Debug, Error)]
pub enum DesignError {
    #[error("{path}: parse error: {reason}")]
    Parse { path: String, reason: String },
    #[error("{path}: schema violation: {reason}")]
    Schema { path: String, reason: String },
    #[error("{path}: integrity error: {reason}")]
    Integrity { path: String, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DesignError {
    /// Stable machine-readable tag.
    pub fn code(&self) -> &'static str {
        match self {
            DesignError::Parse { .. } => "parse",
            DesignError::Schema { .. } => "schema",
            DesignError::Integrity { .. } => "integrity",
            DesignError::Io { .. } => "io",
        }
    }
}

/// Top-level error for pipeline entry points (CLI, FFI).
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Model(ModelError::Infeasible(_)))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
