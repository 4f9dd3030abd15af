//! File emission. Every file is written to a temporary sibling and renamed
//! into place, so readers never observe a partial file.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use spinwave_core::{Error, Result};

use crate::config::{Formats, RunConfig};

/// Content hash of the command and the physics part of the configuration.
pub fn run_id(command: &str, cfg: &RunConfig) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(b"\n");
    h.update(cfg.physics_text().as_bytes());
    hex::encode(h.finalize())[..12].to_string()
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Argument(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Write a table rendered as CSV in each requested format: `<stem>.csv`
/// verbatim, `<stem>.json` as `{"columns": [...], "rows": [[...], ...]}`.
pub fn write_table(dir: &Path, stem: &str, csv: &[u8], formats: Formats) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    if formats.csv {
        let p = dir.join(format!("{stem}.csv"));
        write_atomic(&p, csv)?;
        files.push(p);
    }
    if formats.json {
        let p = dir.join(format!("{stem}.json"));
        write_json(&p, &csv_to_table(csv)?)?;
        files.push(p);
    }
    Ok(files)
}

#[derive(Serialize)]
struct Table {
    columns: Vec<String>,
    /// Non-finite entries become `null`.
    rows: Vec<Vec<Option<f64>>>,
}

fn csv_to_table(csv: &[u8]) -> Result<Table> {
    let text = std::str::from_utf8(csv).map_err(|e| Error::Argument(e.to_string()))?;
    let mut lines = text.lines();
    let columns = lines.next().unwrap_or("").split(',').map(str::to_string).collect();
    let rows = lines
        .enumerate()
        .map(|(i, l)| {
            l.split(',')
                .map(|c| {
                    c.parse::<f64>()
                        .map(|v| v.is_finite().then_some(v))
                        .map_err(|_| Error::Parse { line: i + 2, message: format!("not a number: {c}") })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(Table { columns, rows })
}

/// Run metadata written next to the data files as `run_<id>.json`.
#[derive(Serialize)]
pub struct Sidecar<'a, T: Serialize> {
    pub command: &'a str,
    pub run_id: &'a str,
    pub version: &'a str,
    pub config: std::collections::BTreeMap<&'static str, String>,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    pub summary: T,
}

impl<'a, T: Serialize> Sidecar<'a, T> {
    pub fn new(command: &'a str, run_id: &'a str, cfg: &RunConfig, summary: T) -> Self {
        let config = crate::config::KEYS
            .iter()
            .filter(|k| !k.starts_with("output."))
            .map(|&k| (k, cfg.get(k).unwrap_or_default()))
            .collect();
        Self { command, run_id, version: env!("CARGO_PKG_VERSION"), config, files: Vec::new(), warnings: Vec::new(), summary }
    }

    pub fn write(mut self, dir: &Path, files: &[PathBuf], warnings: Vec<String>) -> Result<PathBuf> {
        self.files = files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect();
        self.warnings = warnings;
        let p = dir.join(format!("run_{}.json", self.run_id));
        write_json(&p, &self)?;
        Ok(p)
    }
}
