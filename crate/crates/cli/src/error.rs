use std::fmt;
use std::path::Path;

/// Exit-code contract: 0 ok, 1 usage/config, 2 I/O, 3 parse, 4 consistency.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Parse(String),
    Consistency(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Consistency(_) => 4,
        }
    }

    pub fn io(path: &Path, err: &std::io::Error) -> Self {
        CliError::Io(format!("{}: {}", path.display(), err))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "error: {}", msg),
            CliError::Io(msg) => write!(f, "i/o error: {}", msg),
            CliError::Parse(msg) => write!(f, "parse error: {}", msg),
            CliError::Consistency(msg) => write!(f, "consistency error: {}", msg),
        }
    }
}

impl std::error::Error for CliError {}
