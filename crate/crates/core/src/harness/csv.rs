use std::fmt::Write as _;
use std::path::Path;

use crate::error::HarnessError;

/// Significant digits written for every number.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Decimal (never exponent) rendering with [`SIGNIFICANT_DIGITS`] significant
/// digits; `-0` is written as `0`.
pub fn format_number(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if v == 0.0 {
        return "0".into();
    }
    // the exponent of the correctly rounded mantissa decides the decimals
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.bytes().all(|b| matches!(b, b'-' | b'0' | b'.')) {
        return "0".into();
    }
    s
}

/// Header plus one line per row, LF line endings.
pub fn render(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn numeric_row(values: &[f64]) -> Vec<String> {
    values.iter().map(|&v| format_number(v)).collect()
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}
