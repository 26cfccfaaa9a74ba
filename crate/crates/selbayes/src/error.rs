use std::path::PathBuf;

use selbayes_core::Error as CoreError;

/// Broad failure class; each maps to a process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Usage,
    Input,
    Model,
    Compute,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Usage => 2,
            Category::Input => 3,
            Category::Model => 4,
            Category::Compute => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Usage => "usage",
            Category::Input => "input",
            Category::Model => "model",
            Category::Compute => "compute",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    /// Every problem found in one file.
    #[error("{path}: {}", .errors.join("; "))]
    Invalid { path: PathBuf, errors: Vec<String> },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn invalid(path: impl Into<PathBuf>, error: impl Into<String>) -> Self {
        CliError::Invalid { path: path.into(), errors: vec![error.into()] }
    }

    pub fn category(&self) -> Category {
        match self {
            CliError::Io { .. } | CliError::Invalid { .. } => Category::Input,
            CliError::Usage(_) => Category::Usage,
            CliError::Core(e) => match e {
                CoreError::EnumerationTooLarge { .. }
                | CoreError::BudgetExceeded { .. }
                | CoreError::NoExactMethod { .. }
                | CoreError::TooManyForExhaustive(_) => Category::Compute,
                _ => Category::Model,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
