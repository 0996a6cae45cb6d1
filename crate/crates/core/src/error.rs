use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cell ({row}, {col}) is outside the {height}x{width} grid")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },
    #[error("region {rows}x{cols} at ({row}, {col}) does not fit in the {height}x{width} grid")]
    RegionOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
        height: usize,
        width: usize,
    },
    #[error("grid must be at least 3x3, got {height}x{width}")]
    GridTooSmall { height: usize, width: usize },
    #[error("{field}: {message}")]
    InvalidParameter { field: &'static str, message: String },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("underdetermined fit: {points} points for degree {degree}")]
    Underdetermined { points: usize, degree: usize },
    #[error("non-positive value {value} at x = {x} inside the fit window")]
    NonPositive { x: f64, value: f64 },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            message: message.into(),
        }
    }
}

/// Checks that `value` is a probability in `[0, 1]`.
pub(crate) fn check_probability(field: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must lie in [0, 1], got {value}")))
    }
}
