use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

/// Process exit codes. These are a stable contract for scripts.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const FAIL: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const ACCURACY: i32 = 3;
    pub const INCONCLUSIVE: i32 = 4;
    pub const DIVERGENCE: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] halfline::Error),

    #[error("cannot read {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("bad configuration file: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{source}; last good snapshot: {}", last_good.as_ref().map_or("none".into(), |p| p.display().to_string()))]
    Diverged {
        source: halfline::Error,
        last_good: Option<PathBuf>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        use halfline::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::Parameter(_)
                | E::Domain(_)
                | E::Pole { .. }
                | E::Usage(_)
                | E::Configuration(_) => exit::CONFIG,
                E::Accuracy { .. } => exit::ACCURACY,
                E::Inconclusive(_) => exit::INCONCLUSIVE,
                E::Divergence { .. } => exit::DIVERGENCE,
                E::Io(_) | E::Csv(_) | E::Json(_) => exit::FAIL,
            },
            CliError::ReadConfig { .. } | CliError::Toml(_) | CliError::Config(_) => exit::CONFIG,
            CliError::Diverged { .. } => exit::DIVERGENCE,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => exit::FAIL,
        }
    }
}
