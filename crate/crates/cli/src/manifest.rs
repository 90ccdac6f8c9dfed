use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use patchsvm::eval::StageTiming;
use patchsvm::fsutil;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliResult;

/// Provenance record written next to every stage's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub stage: String,
    pub config: BTreeMap<String, String>,
    /// SHA-256 of every file read, keyed by path.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of every file written, keyed by path.
    pub outputs: BTreeMap<String, String>,
    pub timings: Vec<StageTiming>,
}

impl RunManifest {
    pub fn new(stage: &str, config: BTreeMap<String, String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            stage: stage.to_string(),
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timings: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> CliResult<()> {
        self.outputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn time(&mut self, stage: &str, seconds: f64) {
        self.timings.push(StageTiming { stage: stage.to_string(), seconds });
    }

    pub fn write(&self, out_dir: &Path) -> CliResult<PathBuf> {
        let path = manifest_path(out_dir, &self.stage);
        let text = serde_json::to_string_pretty(self)?;
        fsutil::write_string_atomic(&path, &(text + "\n"))?;
        Ok(path)
    }
}

pub fn manifest_path(out_dir: &Path, stage: &str) -> PathBuf {
    out_dir.join("manifests").join(format!("{stage}.json"))
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let mut r = BufReader::new(File::open(path)?);
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = r.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}
