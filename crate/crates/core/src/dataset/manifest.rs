//! Run manifests: enough to reproduce an output from its inputs.

use std::fs::File;
use std::io::{self, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &Path) -> io::Result<InputDigest> {
        Ok(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    /// Fully resolved configuration of the run.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub catalog_version: String,
    pub inputs: Vec<InputDigest>,
    /// Named row counts, e.g. rows written, rows excluded.
    pub row_counts: std::collections::BTreeMap<String, usize>,
    pub outputs: Vec<String>,
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut f = File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}
