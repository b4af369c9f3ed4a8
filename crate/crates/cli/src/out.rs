//! Atomic report writers. Every file goes to a temp file in the target
//! directory first and is renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::Failure;

fn temp_beside(path: &Path) -> Result<NamedTempFile, Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    NamedTempFile::new_in(&dir).map_err(|e| Failure::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let mut tmp = temp_beside(path)?;
    tmp.write_all(bytes).map_err(|e| Failure::io(path, e))?;
    tmp.persist(path).map_err(|e| Failure::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    write_bytes(path, s.as_bytes())
}

/// Writes a CSV with the given header and string rows.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Failure::io(path, e.into()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| Failure::io(path, e.into()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::io(path, e.into_error()))?;
    write_bytes(path, &bytes)
}

/// The fixed envelope shared by every JSON report.
#[derive(Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub schema: u32,
    pub command: &'a str,
    pub version: &'a str,
    pub seed: Option<u64>,
    pub config: &'a C,
    pub result: &'a R,
    pub duration_secs: f64,
}
