use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// Each variant maps onto one CLI exit code class (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data: a schema violation, a broken invariant or a
    /// precondition on values that the caller supplied.
    #[error("{location}{message}")]
    Validation { location: Location, message: String },

    /// A special function failed to converge or a linear system was singular.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Invalid combination of options or arguments.
    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Where in an input a validation error was found.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Location {
    pub line: Option<usize>,
    pub field: Option<String>,
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (&self.line, &self.field) {
            (Some(l), Some(fd)) => write!(f, "line {l}, field `{fd}`: "),
            (Some(l), None) => write!(f, "line {l}: "),
            (None, Some(fd)) => write!(f, "field `{fd}`: "),
            (None, None) => Ok(()),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn invalid(message: impl Into<String>) -> Self {
        Error::Validation {
            location: Location::default(),
            message: message.into(),
        }
    }

    pub fn invalid_at(line: usize, field: Option<&str>, message: impl Into<String>) -> Self {
        Error::Validation {
            location: Location {
                line: Some(line),
                field: field.map(str::to_owned),
            },
            message: message.into(),
        }
    }

    pub fn invalid_field(field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            location: Location {
                line: None,
                field: Some(field.to_owned()),
            },
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a line number to a validation error that does not carry one yet.
    pub fn at_line(self, line: usize) -> Self {
        match self {
            Error::Validation {
                mut location,
                message,
            } => {
                location.line.get_or_insert(line);
                Error::Validation { location, message }
            }
            other => other,
        }
    }

    /// 1 usage, 2 data validation, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Validation { .. } | Error::Io { .. } => 2,
            Error::Numerical(_) => 3,
        }
    }
}
