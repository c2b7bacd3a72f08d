use std::path::PathBuf;

use thiserror::Error;

use crate::problem::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem instance: {0}")]
    Invalid(ValidationReport),

    #[error("{what}: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    Shape {
        what: &'static str,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    /// Every `A_i` is zero, so the relative residual is undefined.
    #[error("degenerate instance: all A_i are zero")]
    DegenerateInstance,

    #[error("previous gradient is zero")]
    ZeroPreviousGradient,

    #[error("search direction is degenerate (leading quartic coefficient {a4:e} below threshold {threshold:e})")]
    DegenerateDirection { a4: f64, threshold: f64 },

    #[error("no positive critical point improves on t = 0 (a1 = {a1:e})")]
    NoPositiveCriticalPoint { a1: f64 },

    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("non-finite objective or gradient at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("{}:{line}:{column}: {message}", path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<input>".into()))]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn shape(
        what: &'static str,
        expected: (usize, usize),
        actual: (usize, usize),
    ) -> Self {
        Error::Shape {
            what,
            expected_rows: expected.0,
            expected_cols: expected.1,
            rows: actual.0,
            cols: actual.1,
        }
    }
}
