//! Experiment runner for the grated-nanofiber LIDDI pipeline: configuration,
//! the table-producing commands and CSV output.

pub mod commands;
pub mod config;
pub mod output;
pub mod setup;

pub use commands::{Command, ScalingReport};
pub use config::{
    load_config, load_config_str, load_config_with, ConfigError, ExperimentConfig, Overrides,
};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerical(#[from] liddi_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl HarnessError {
    /// 2 for invalid input, 3 for numerical failure, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(ConfigError::Io { .. }) => 1,
            HarnessError::Config(_) => 2,
            HarnessError::Numerical(liddi_core::Error::InvalidParameter { .. }) => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::Io(_) | HarnessError::Pool(_) => 1,
        }
    }
}
