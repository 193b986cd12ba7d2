use std::path::PathBuf;

use crate::Site;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("site ({}, {}) lies outside the certified window", .0.x, .0.y)]
    WindowExceeded(Site),
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid barrier configuration: {0}")]
    InvalidConfiguration(String),
    #[error("estimation failed: {0}")]
    EstimationFailed(String),
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("refusing to simulate: {0}")]
    CostGuard(String),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
