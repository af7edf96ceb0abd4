use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is missing or violates a documented constraint.
    #[error("invalid configuration `{key}`: {message}")]
    Config { key: String, message: String },

    /// The configuration text could not be parsed.
    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    /// A portable graymap payload is malformed.
    #[error("graymap parse error at byte {offset}: {message}")]
    ImageParse { offset: usize, message: String },

    /// The requested eyeball surface point faces away from the camera.
    #[error("surface point is not visible from the camera")]
    NotVisible,

    /// A detection area does not overlap the (padded) image frame.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Inputs violate an operation contract (length mismatch, grid mismatch, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A calibration fit could not be computed.
    #[error("calibration fit failed on {axis} axis: {message}")]
    Fit { axis: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
