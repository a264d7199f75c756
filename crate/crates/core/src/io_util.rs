//! Small text-serialization helpers shared by the corpus format, model
//! documents and report writers.

use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Formats a float with 17 significant digits, enough for `str::parse::<f64>`
/// to reproduce the original bit pattern.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Parses a float, reporting the file and line on failure.
pub fn parse_f64(text: &str, file: &Path, line: usize) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(file, line, format!("expected a number, got {text:?}")))
}

/// Writes `contents` through a temporary file in the same directory and
/// renames it into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = match path.file_name() {
        Some(name) => {
            let mut tmp_name = name.to_os_string();
            tmp_name.push(".tmp");
            path.with_file_name(tmp_name)
        }
        None => return Err(Error::invalid(format!("{}: not a file path", path.display()))),
    };
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Reads a whole file into memory with path-tagged errors.
pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
