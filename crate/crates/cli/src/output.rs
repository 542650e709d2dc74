//! Output files, checksums and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const MANIFEST_SCHEMA: &str = "mblq-manifest/v1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Stream address below the master seed, e.g. `[grid, realization]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedSeed {
    pub label: String,
    pub path: Vec<u64>,
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum RunStatus {
    Complete,
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub code_version: String,
    pub config: ExperimentConfig,
    pub workers: usize,
    pub derived_seeds: Vec<DerivedSeed>,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputRecord>,
    pub status: RunStatus,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(dir.join(MANIFEST_FILE), text + "\n")
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").expect("writing to a String");
    }
    out
}

/// Writes files below one directory and remembers their checksums.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    records: Vec<OutputRecord>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            records: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn records(&self) -> &[OutputRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<OutputRecord> {
        self.records
    }

    pub fn write(&mut self, relative: &str, bytes: &[u8]) -> io::Result<()> {
        let path = self.dir.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.records.retain(|r| r.path != relative);
        self.records.push(OutputRecord {
            path: relative.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_csv(&mut self, relative: &str, table: &CsvTable) -> io::Result<()> {
        self.write(relative, table.render().as_bytes())
    }
}

/// CSV with a schema comment line and a header naming columns and units.
#[derive(Debug, Clone)]
pub struct CsvTable {
    schema: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(schema: &str, header: &[&str]) -> Self {
        Self {
            schema: schema.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.header.len(), "row width");
        self.rows.push(cells);
    }

    pub fn numeric_row(&mut self, cells: &[f64]) {
        self.row(cells.iter().map(|x| x.to_string()).collect());
    }

    pub fn render(&self) -> String {
        let mut out = format!("# schema: {}\n{}\n", self.schema, self.header.join(","));
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// `F2.5_W20`-style tag for file names.
pub fn grid_tag(drive: f64, disorder: f64) -> String {
    format!("F{drive}_W{disorder}")
}
