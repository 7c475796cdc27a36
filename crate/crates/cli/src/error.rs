//! Process-level error handling: every failure carries a machine-parsable
//! category and maps to the documented exit code.

use std::fmt;

/// Failure category; doubles as the code in the `error[CODE]:` prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// Bad user input: flags, schemas, model invariants. Exit code 2.
    Validation,
    /// Malformed input files. Exit code 2.
    Schema,
    /// Filesystem trouble. Exit code 1.
    Io,
    /// Failures during computation. Exit code 1.
    Runtime,
}

impl Category {
    pub fn code(self) -> &'static str {
        match self {
            Category::Validation => "validation",
            Category::Schema => "schema",
            Category::Io => "io",
            Category::Runtime => "runtime",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Category::Validation | Category::Schema => 2,
            Category::Io | Category::Runtime => 1,
        }
    }
}

#[derive(Debug)]
pub struct AppError {
    pub category: Category,
    pub message: String,
}

impl AppError {
    pub fn new(category: Category, message: impl Into<String>) -> AppError {
        AppError {
            category,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> AppError {
        AppError::new(Category::Validation, message)
    }

    pub fn schema(message: impl Into<String>) -> AppError {
        AppError::new(Category::Schema, message)
    }

    /// Attach a file (and optional line) to the message.
    pub fn at(mut self, path: &std::path::Path, line: Option<usize>) -> AppError {
        self.message = match line {
            Some(k) => format!("{} line {k}: {}", path.display(), self.message),
            None => format!("{}: {}", path.display(), self.message),
        };
        self
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.category.code(), self.message)
    }
}

impl std::error::Error for AppError {}

impl From<semimarkov::Error> for AppError {
    fn from(err: semimarkov::Error) -> AppError {
        use semimarkov::Error as E;
        let category = match err {
            E::UnknownSymbol { .. }
            | E::EmptySequence
            | E::InvalidDims { .. }
            | E::InvalidThresholds
            | E::UnknownScaleValue { .. }
            | E::Validation { .. } => Category::Validation,
            E::LengthExceeded { .. }
            | E::DegenerateLattice
            | E::ImpossibleSequence
            | E::TooLarge { .. } => Category::Runtime,
        };
        AppError::new(category, err.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(err: std::io::Error) -> AppError {
        AppError::new(Category::Io, err.to_string())
    }
}

impl From<serde_json::Error> for AppError {
    fn from(err: serde_json::Error) -> AppError {
        AppError::new(Category::Schema, err.to_string())
    }
}

impl From<csv::Error> for AppError {
    fn from(err: csv::Error) -> AppError {
        AppError::new(Category::Schema, err.to_string())
    }
}

pub type AppResult<T> = Result<T, AppError>;
