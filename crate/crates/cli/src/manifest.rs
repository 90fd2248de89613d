//! Deterministic run manifests: per stage, the hashes of every input and
//! output file plus the seed and config digest. Timings go to a separate
//! file so manifests stay byte-identical across re-runs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::StageError;

pub fn sha256_file(path: &Path) -> Result<String, StageError> {
    let mut file = File::open(path)
        .map_err(|e| StageError::Config(format!("cannot hash {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file
            .read(&mut buf)
            .map_err(|e| StageError::Config(format!("cannot hash {}: {e}", path.display())))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("sha256:{}", hex::encode(hasher.finalize())))
}

pub fn sha256_text(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    format!("sha256:{}", hex::encode(hasher.finalize()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub seed: u64,
    pub config_digest: String,
    /// File name -> content hash.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(stage: &str, seed: u64, config_digest: String) -> Self {
        Manifest {
            stage: stage.to_string(),
            seed,
            config_digest,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), StageError> {
        self.inputs.insert(
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
            sha256_file(path)?,
        );
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<(), StageError> {
        self.outputs.insert(
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
            sha256_file(path)?,
        );
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> Result<(), StageError> {
        let path = out_dir.join(format!("manifest_{}.json", self.stage));
        let file = BufWriter::new(File::create(&path).map_err(|e| {
            StageError::Config(format!("cannot write {}: {e}", path.display()))
        })?);
        serde_json::to_writer_pretty(file, self)
            .map_err(|e| StageError::Config(format!("cannot serialize manifest: {e}")))
    }
}

/// Wall-clock report, deliberately outside the manifest.
#[derive(Debug, Serialize)]
pub struct Timing {
    pub stage: String,
    pub elapsed_ms: u128,
}

pub fn write_timing(out_dir: &Path, stage: &str, elapsed_ms: u128) {
    let path = out_dir.join(format!("timings_{stage}.json"));
    if let Ok(file) = File::create(&path) {
        let _ = serde_json::to_writer_pretty(
            BufWriter::new(file),
            &Timing {
                stage: stage.to_string(),
                elapsed_ms,
            },
        );
    }
}
