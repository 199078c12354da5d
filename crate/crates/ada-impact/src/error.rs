//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// A parse failure in a single source unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitError {
    pub path: PathBuf,
    pub line: u32,
    pub message: String,
}

impl std::fmt::Display for UnitError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.path.display(), self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: file is not valid UTF-8")]
    NonUtf8 { path: PathBuf },

    #[error("{0}")]
    Parse(UnitError),

    /// Aggregate of unit-level parse errors collected over a whole tree.
    #[error("{} unit(s) failed to parse", .0.len())]
    ParseErrors(Vec<UnitError>),

    #[error("duplicate {kind} unit for package `{package}`: {first} and {second}")]
    DuplicateUnit {
        package: String,
        kind: &'static str,
        first: PathBuf,
        second: PathBuf,
    },

    #[error("malformed snapshot file {path}: {message}")]
    SnapshotFormat { path: PathBuf, message: String },

    #[error("unsupported snapshot format_version {found} (expected {expected})")]
    VersionMismatch { found: u64, expected: u32 },

    #[error("unsupported hash_algorithm `{found}` (expected `{expected}`)")]
    UnsupportedHashAlgorithm {
        found: String,
        expected: &'static str,
    },

    #[error("snapshots use different hash algorithms: `{base}` vs `{new}`")]
    HashAlgorithmMismatch { base: String, new: String },

    #[error("malformed coverage file {path}: {message}")]
    CoverageFormat { path: PathBuf, message: String },

    #[error("duplicate test id `{id}` in coverage file")]
    DuplicateTest { id: String },

    #[error("with-cycle between package specifications: {}", .0.join(" -> "))]
    SpecWithCycle(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// One line per underlying failure, for CLI reporting.
    pub fn detail_lines(&self) -> Vec<String> {
        match self {
            Error::ParseErrors(units) => units.iter().map(|u| u.to_string()).collect(),
            other => vec![other.to_string()],
        }
    }
}
