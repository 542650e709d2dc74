//! On-disk checkpoints for long composite builds and training runs.
//!
//! A checkpoint carries a fingerprint of the job that wrote it; a file with
//! a different fingerprint is ignored and overwritten.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use mblq::propagator::UnitaryMatrix;
use mblq::trainer::TrainingTrace;
use mblq::C64;
use serde::{Deserialize, Serialize};

use crate::output::sha256_hex;

const MAGIC: &[u8; 8] = b"MBLQCU01";

pub fn fingerprint(parts: &[&str]) -> String {
    sha256_hex(parts.join("\u{1f}").as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    path: PathBuf,
    fingerprint: String,
}

impl Checkpoint {
    pub fn new(path: PathBuf, fingerprint: String) -> Self {
        Self { path, fingerprint }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Deletes the file, and its directory once empty.
    pub fn remove(&self) -> io::Result<()> {
        match fs::remove_file(&self.path) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(e),
            _ => {}
        }
        if let Some(parent) = self.path.parent() {
            let _ = fs::remove_dir(parent);
        }
        Ok(())
    }

    /// Layout: magic, fingerprint (64 ASCII hex), dim and layer count as
    /// little-endian `u64`, then `dim²` complex entries column-major.
    pub fn save_composite(&self, u: &UnitaryMatrix, layers_done: usize) -> io::Result<()> {
        let n = u.dim();
        let mut bytes = Vec::with_capacity(88 + 16 * n * n);
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(self.fingerprint.as_bytes());
        bytes.extend_from_slice(&(n as u64).to_le_bytes());
        bytes.extend_from_slice(&(layers_done as u64).to_le_bytes());
        let m = u.matrix();
        for j in 0..n {
            for i in 0..n {
                bytes.extend_from_slice(&m[(i, j)].re.to_le_bytes());
                bytes.extend_from_slice(&m[(i, j)].im.to_le_bytes());
            }
        }
        write_atomic(&self.path, &bytes)
    }

    /// `None` when absent, stale, or for a different dimension.
    pub fn load_composite(&self, dim: usize) -> io::Result<Option<(UnitaryMatrix, usize)>> {
        let bytes = match fs::read(&self.path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        let header = 8 + 64 + 16;
        if bytes.len() != header + 16 * dim * dim
            || &bytes[..8] != MAGIC
            || &bytes[8..72] != self.fingerprint.as_bytes()
        {
            return Ok(None);
        }
        let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
        if word(72) as usize != dim {
            return Ok(None);
        }
        let layers = word(80) as usize;
        let float = |at: usize| f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
        let m = faer::Mat::<C64>::from_fn(dim, dim, |i, j| {
            let at = header + 16 * (j * dim + i);
            C64::new(float(at), float(at + 8))
        });
        Ok(Some((UnitaryMatrix::from_matrix(m), layers)))
    }

    pub fn save_trace(&self, trace: &TrainingTrace) -> io::Result<()> {
        let file = TraceFile {
            fingerprint: self.fingerprint.clone(),
            trace: trace.clone(),
        };
        let text = serde_json::to_string(&file).map_err(io::Error::other)?;
        write_atomic(&self.path, text.as_bytes())
    }

    pub fn load_trace(&self) -> io::Result<Option<TrainingTrace>> {
        let text = match fs::read_to_string(&self.path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        Ok(serde_json::from_str::<TraceFile>(&text)
            .ok()
            .filter(|f| f.fingerprint == self.fingerprint)
            .map(|f| f.trace))
    }
}

#[derive(Serialize, Deserialize)]
struct TraceFile {
    fingerprint: String,
    trace: TrainingTrace,
}
