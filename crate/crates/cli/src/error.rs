use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("unknown configuration keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Model(#[from] spinamp_core::Error),
}

impl CliError {
    /// Short category used in the stderr report.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) | CliError::UnknownKeys(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Model(e) => match e {
                spinamp_core::Error::Configuration(_) | spinamp_core::Error::DegenerateRatio(_) => {
                    "model"
                }
                spinamp_core::Error::Singular(_) => "numeric",
                spinamp_core::Error::InvalidInput(_) => "input",
                spinamp_core::Error::Degenerate(_) => "degenerate",
                spinamp_core::Error::Contract(_) => "contract",
            },
        }
    }

    /// `error kind=<kind> command=<cmd> message="<text>"` on one line.
    pub fn report(&self, command: &str) -> String {
        let msg = crate::config::one_line(&self.to_string())
            .replace('\\', "\\\\")
            .replace('"', "\\\"");
        format!(
            "error kind={} command={} message=\"{}\"",
            self.kind(),
            command,
            msg
        )
    }
}
