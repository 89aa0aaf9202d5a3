//! Output formatting and atomic file writes.
//!
//! Every generated file embeds the resolved run configuration so a result
//! can always be traced back to its parameters: CSVs carry a `# config:`
//! comment line, SVGs an XML comment, PNGs a `config` text chunk and JSON
//! documents a `config` field. The echo deliberately excludes filesystem
//! paths and thread counts, so identical analyses produce identical bytes
//! wherever and however they run.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Format a float with six significant digits.
///
/// Magnitudes from 1e-4 up to just under 1e9 use fixed-point with the
/// decimal count chosen from the exponent; anything outside switches to
/// scientific notation.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let e = x.abs().log10().floor() as i32;
    if !(-4..=8).contains(&e) {
        return format!("{x:.5e}");
    }
    let places = (5 - e).max(0) as usize;
    format!("{x:.places$}")
}

/// Empty string for absent optional values.
pub fn format_opt(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}

/// Join flag names for a CSV cell; flags never contain the separator.
pub fn join_flags(flags: &[String]) -> String {
    flags.join(";")
}

/// Create the output directory if needed and return it.
pub fn prepare_out_dir(out: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(out)
        .map_err(|e| CliError::UnwritableOutput(format!("{}: {e}", out.display())))?;
    Ok(out.to_path_buf())
}

/// Write via a temporary sibling file plus rename, so readers never see a
/// half-written output.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let err = |e: std::io::Error| CliError::UnwritableOutput(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::UnwritableOutput(format!("{}: no file name", path.display())))?;
    let tmp = match dir {
        Some(d) => d.join(format!(".{file_name}.tmp")),
        None => PathBuf::from(format!(".{file_name}.tmp")),
    };
    fs::write(&tmp, bytes).map_err(err)?;
    fs::rename(&tmp, path).map_err(err)?;
    Ok(())
}

/// Write a CSV file: config comment, header, then rows. Cells were built
/// without commas or newlines, so no quoting is needed.
pub fn write_csv(
    path: &Path,
    config: &serde_json::Value,
    header: &str,
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    let mut text = String::new();
    text.push_str(&format!("# config: {config}\n"));
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}

/// Write a JSON document with the config embedded under a `config` key.
pub fn write_json(
    path: &Path,
    config: &serde_json::Value,
    body: serde_json::Value,
) -> Result<(), CliError> {
    let mut doc = serde_json::Map::new();
    doc.insert("config".to_string(), config.clone());
    match body {
        serde_json::Value::Object(map) => doc.extend(map),
        other => {
            doc.insert("data".to_string(), other);
        }
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(doc))
        .expect("json values serialize");
    atomic_write(path, format!("{text}\n").as_bytes())
}
