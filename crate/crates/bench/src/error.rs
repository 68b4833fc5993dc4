use std::path::PathBuf;

use thiserror::Error;

/// Pipeline stage an error originated in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Setup,
    Direct,
    Measure,
    Reconstruct,
    Identify,
    Svd,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Setup => "setup",
            Stage::Direct => "direct solve",
            Stage::Measure => "measurement",
            Stage::Reconstruct => "reconstruction",
            Stage::Identify => "identification",
            Stage::Svd => "singular values",
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Parse(String),

    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error("{} stage: {source}", stage.name())]
    Stage {
        stage: Stage,
        #[source]
        source: cauchy_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("report: {0}")]
    Report(#[from] serde_json::Error),
}

impl BenchError {
    pub fn field(field: &str, message: impl Into<String>) -> Self {
        BenchError::Field { field: field.to_string(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io { path: path.into(), source }
    }

    /// Process exit code: 2 for invalid input, 3 for numerical failure,
    /// 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Parse(_) | BenchError::Field { .. } => 2,
            BenchError::Stage { source, .. } if source.is_numerical() => 3,
            BenchError::Stage { .. } => 2,
            BenchError::Io { .. } | BenchError::Report(_) => 1,
        }
    }
}

pub(crate) trait StageExt<R> {
    fn at(self, stage: Stage) -> Result<R, BenchError>;
}

impl<R> StageExt<R> for cauchy_core::Result<R> {
    fn at(self, stage: Stage) -> Result<R, BenchError> {
        self.map_err(|source| BenchError::Stage { stage, source })
    }
}
