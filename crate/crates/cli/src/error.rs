use std::path::{Path, PathBuf};

use serde::Serialize;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Bad flags or an invalid configuration value.
    pub const USAGE: i32 = 2;
    /// A file could not be read or written.
    pub const IO: i32 = 3;
    /// A file was read but its contents do not parse or match their schema.
    pub const PARSE: i32 = 4;
    /// The inputs were valid but the computation failed.
    pub const RUNTIME: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Parse(_) => "parse",
            CliError::Runtime(_) => "runtime",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io { .. } => exit::IO,
            CliError::Parse(_) => exit::PARSE,
            CliError::Runtime(_) => exit::RUNTIME,
        }
    }

    /// The error as one line of JSON.
    pub fn to_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            error: &'a str,
            code: i32,
            message: String,
        }
        let message = self.to_string().replace(['\n', '\r'], " ");
        serde_json::to_string(&Line {
            error: self.kind(),
            code: self.exit_code(),
            message,
        })
        .expect("error line serializes")
    }
}

impl From<isoseg_core::Error> for CliError {
    fn from(e: isoseg_core::Error) -> Self {
        use isoseg_core::Error as E;
        match e {
            E::Io { path, source } => CliError::Io { path, source },
            E::Config(_) => CliError::Usage(e.to_string()),
            E::UnsupportedDatatype(_)
            | E::UnsupportedFormat(_)
            | E::Truncated { .. }
            | E::Malformed { .. }
            | E::Json(_) => CliError::Parse(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
