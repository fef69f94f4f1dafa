use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::Format;
use crate::CliError;

fn write_rows<T: Serialize, W: Write>(rows: &[T], format: Format, out: W) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row).map_err(|e| CliError::Output(e.to_string()))?;
            }
            w.flush().map_err(|e| CliError::Output(e.to_string()))?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows).map_err(|e| CliError::Output(e.to_string()))?;
            writeln!(out).map_err(|e| CliError::Output(e.to_string()))?;
        }
    }
    Ok(())
}

/// Writes rows to `path` if given, otherwise to `stdout`.
pub fn emit<T: Serialize>(
    rows: &[T],
    format: Format,
    path: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?;
            write_rows(rows, format, BufWriter::new(f))
        }
        None => write_rows(rows, format, stdout),
    }
}
