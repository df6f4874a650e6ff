//! CSV helpers shared by traces, plans and pulse schedules.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Writes one comma-separated row, 15 significant digits per value.
pub(crate) fn write_row<W: Write>(out: &mut W, fields: &[f64]) -> std::io::Result<()> {
    let mut first = true;
    for v in fields {
        if !first {
            out.write_all(b",")?;
        }
        first = false;
        write!(out, "{v:.14e}")?;
    }
    out.write_all(b"\n")
}

pub(crate) fn save_with<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    write(&mut out).map_err(io_err)?;
    out.flush().map_err(io_err)
}

/// Parses the numeric rows of a CSV written by this crate, skipping the
/// header and `#` comment lines.
pub fn read_numeric_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .skip(1)
        .map(|line| {
            line.split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("bad CSV field {f:?}: {e}")))
                })
                .collect()
        })
        .collect()
}
