//! Output formatting helpers shared by the command-line front end.
//!
//! Floats are rendered with 17 significant digits so that re-running a
//! command with identical inputs reproduces byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{FracError, Result};

/// Render a float with enough digits to round-trip exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write one CSV file with a header row and `\n` line endings.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path)
        .map_err(|e| FracError::Invalid(format!("cannot create {}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    write_csv_to(&mut out, header, rows)
        .map_err(|e| FracError::Invalid(format!("cannot write {}: {e}", path.display())))
}

fn write_csv_to(out: &mut impl Write, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()
}

/// Serialize `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| FracError::Invalid(format!("serialization failed: {e}")))?;
    std::fs::write(path, body + "\n")
        .map_err(|e| FracError::Invalid(format!("cannot write {}: {e}", path.display())))
}
