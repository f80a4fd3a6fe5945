//! Configuration, end-to-end pipeline and plot emission for the `acluster`
//! command.

use std::path::PathBuf;

use acoustic_cluster::signal::SignalError;
use acoustic_cluster::Error;
use thiserror::Error;

pub mod config;
pub mod pipeline;
pub mod plots;

pub use config::{Input, KChoice, Method, PipelineConfig};
pub use pipeline::{run_pipeline, MethodReport, RunReport};
pub use plots::emit_plots;

/// Process exit status for each failure class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const IO: i32 = 3;
    pub const NUMERICAL: i32 = 4;
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error("plots: {0}")]
    Plot(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => exit::CONFIG,
            PipelineError::Io { .. } | PipelineError::MissingArtifact(_) | PipelineError::Plot(_) => exit::IO,
            PipelineError::Stage { source, .. } => match source {
                Error::Signal(SignalError::InvalidWindowing(_) | SignalError::CoefficientsOutOfRange { .. }) => {
                    exit::CONFIG
                }
                Error::Signal(_) => exit::IO,
                Error::Synth(_) => exit::CONFIG,
                _ => exit::NUMERICAL,
            },
        }
    }
}
