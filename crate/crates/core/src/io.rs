//! File helpers shared by the dataset generator and the experiment harness.

use crate::error::{Error, Result};
use crate::phase::PhaseState;
use std::fs;
use std::path::Path;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Contract(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Trajectory CSV: header `step,z0,…,z{2n−1}`, one row per state.
pub fn trajectory_csv(states: &[PhaseState]) -> String {
    let dim = states.first().map_or(0, PhaseState::dim);
    let mut out = String::from("step");
    for i in 0..dim {
        out.push_str(&format!(",z{i}"));
    }
    out.push('\n');
    for (k, z) in states.iter().enumerate() {
        out.push_str(&k.to_string());
        for v in z.as_slice() {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

/// Parses a headed numeric CSV into rows; the header is returned separately.
pub fn parse_numeric_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let rows = lines
        .enumerate()
        .map(|(i, line)| {
            let row: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
            if row.len() != header.len() {
                return Err(Error::Parse(format!("row {} has {} fields, header has {}", i + 1, row.len(), header.len())));
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}
