use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by kernel evaluation, factorization, solvers and data loading.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("point {value} is outside the domain (0,1) of the {kernel} kernel")]
    DomainViolation { kernel: &'static str, value: f64 },

    #[error("the {kernel} kernel is defined on the real line only, got points of dimension {dim}")]
    DomainDimension { kernel: &'static str, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample points {first} and {second} are not pairwise distinct (distance {distance:e})")]
    DuplicatePoints {
        first: usize,
        second: usize,
        distance: f64,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("matrix is singular to working precision ({0})")]
    Singular(&'static str),

    #[error("condition estimate {estimate:e} exceeds threshold {threshold:e}")]
    IllConditioned { estimate: f64, threshold: f64 },

    #[error("coupling matrix is not {0}")]
    InvalidCoupling(&'static str),

    #[error("invalid descriptor `{descriptor}`: {reason}")]
    Descriptor { descriptor: String, reason: String },

    #[error("{path}: row {row}, column {column}: cannot parse `{cell}` as a number")]
    CsvParse {
        path: PathBuf,
        row: usize,
        column: usize,
        cell: String,
    },

    #[error("{path}: row {row} has {found} columns, expected {expected}")]
    CsvRagged {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row count mismatch: features have {features} rows, targets have {targets} rows")]
    RowCountMismatch { features: usize, targets: usize },

    #[error("{0}: file is empty")]
    EmptyFile(PathBuf),

    #[error("{path}: bad IDX magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("{path}: truncated payload, expected {expected} bytes, found {actual}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },

    #[error("item count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
