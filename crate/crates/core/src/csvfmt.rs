//! Shared CSV conventions: `.` decimal separator, 17 significant digits.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
}

/// Formats a real with 17 significant digits so it parses back bit-exact.
pub fn fmt_real<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.to_f64().unwrap_or(f64::NAN))
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}
