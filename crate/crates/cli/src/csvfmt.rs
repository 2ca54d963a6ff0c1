//! Deterministic CSV serialization.
//!
//! Floats are written with 17 significant digits (one leading plus sixteen
//! fractional mantissa digits in scientific notation), which round-trips
//! IEEE doubles exactly; identical runs therefore produce byte-identical
//! files.

use std::fmt::Write as _;

/// One float, 17 significant digits, scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV row from pre-formatted cells.
pub fn write_row(out: &mut String, cells: &[String]) {
    let _ = writeln!(out, "{}", cells.join(","));
}

/// Header plus rows of floats, first column typically time.
pub fn table_to_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", header.join(","));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        write_row(&mut out, &cells);
    }
    out
}
