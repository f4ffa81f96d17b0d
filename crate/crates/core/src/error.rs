//! Top-level error with the stage that raised it and a process exit code.

use std::path::PathBuf;

use thiserror::Error;

use crate::change_detect::DensityError;
use crate::components::ComponentError;
use crate::config::ConfigError;
use crate::flowfield::FlowError;
use crate::ingest::IngestError;
use crate::kmeans::KmeansError;
use crate::patterns::PatternError;
use crate::reachability::ReachabilityError;
use crate::synthgen::SynthError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("flowfield: {0}")]
    Flow(#[from] FlowError),
    #[error("motion_components: {0}")]
    Component(#[from] ComponentError),
    #[error("reachability: {0}")]
    Reachability(#[from] ReachabilityError),
    #[error("patterns: {0}")]
    Pattern(#[from] PatternError),
    #[error("change_detect: {0}")]
    Density(#[from] DensityError),
    #[error("synthgen: {0}")]
    Synth(#[from] SynthError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(context: &str, path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        Error::Io {
            context: format!("{context} {}", path.display()),
            path,
            source,
        }
    }

    /// 1 usage or config problem, 2 unusable data, 3 internal failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) => 1,
            Error::Pattern(PatternError::InvalidNode { .. } | PatternError::InvalidParam(_)) => 1,
            Error::Reachability(ReachabilityError::InvalidParam(_)) => 1,
            Error::Density(DensityError::InvalidParam(_)) => 1,
            Error::Synth(SynthError::InvalidSpec(_) | SynthError::UnknownScenario(_)) => 1,
            Error::Component(ComponentError::InvalidBeta(_)) => 1,
            Error::Ingest(_) | Error::Flow(_) => 2,
            Error::Component(ComponentError::Kmeans(KmeansError::TooManyClusters { .. })) => 2,
            Error::Density(DensityError::EmptyPattern(_)) => 2,
            _ => 3,
        }
    }
}
