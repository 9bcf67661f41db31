use thiserror::Error;

/// Invalid configuration, located by its dotted key path.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),

    #[error("trial {index}: {source}")]
    Trial {
        index: usize,
        #[source]
        source: wva_core::Error,
    },

    #[error(transparent)]
    Model(#[from] wva_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl BenchError {
    /// 1 for configuration problems, 2 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 1,
            _ => 2,
        }
    }
}
