//! Experiment harness for the IRS actor-critic: configuration, multi-seed
//! runs, metrics CSV, checkpoint files, SVG plots and the oracle check.

pub mod checkpoint;
pub mod compare;
pub mod config;
pub mod experiment;
pub mod metrics;
pub mod oracle;
pub mod plot;

pub use config::{load_config, ExperimentConfig, Preset, Variant};

/// Version string recorded in manifests.
pub const ARTIFACT_VERSION: &str = concat!("irsrl ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("invalid value for {key:?}: {reason}")]
    Invalid { key: String, reason: String },
    #[error("malformed metrics: {0}")]
    Metrics(String),
    #[error(transparent)]
    Core(irsrl_core::Error),
    #[error("all {0} seeds failed")]
    AllSeedsFailed(usize),
}

impl HarnessError {
    pub fn invalid(key: &str, reason: &str) -> Self {
        Self::Invalid {
            key: key.to_string(),
            reason: reason.to_string(),
        }
    }

    /// Maps core parameter errors onto config-key errors.
    pub fn from_core(e: irsrl_core::Error) -> Self {
        match e {
            irsrl_core::Error::InvalidParameter { name, reason } => Self::invalid(name, &reason),
            other => Self::Core(other),
        }
    }

    /// The config key this error refers to, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            Self::Invalid { key, .. } | Self::UnknownKey(key) => Some(key),
            _ => None,
        }
    }

    pub fn is_config_error(&self) -> bool {
        matches!(self, Self::Parse(_) | Self::UnknownKey(_) | Self::Invalid { .. })
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<irsrl_core::Error> for HarnessError {
    fn from(e: irsrl_core::Error) -> Self {
        Self::from_core(e)
    }
}
