use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("solver failed: {0}")]
    Solver(multibump::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<multibump::Error> for CliError {
    fn from(e: multibump::Error) -> Self {
        use multibump::Error as E;
        match e {
            E::Domain(_) | E::Configuration(_) | E::Truncation { .. } | E::GridMismatch => {
                CliError::Validation(e.to_string())
            }
            E::Io(io) => CliError::Io(io),
            other => CliError::Solver(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Validation(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Solver(_) => "solver",
            CliError::Validation(_) => "validation",
            CliError::Io(_) => "io",
        }
    }

    /// Machine-readable form printed on stderr and written to `error.json`.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "status": "error",
            "exit_code": self.exit_code(),
            "kind": self.kind(),
            "message": self.to_string(),
        })
    }
}
