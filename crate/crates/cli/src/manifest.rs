//! Per-run record of configuration, versions and file digests. Contains no
//! timestamps, so reruns with the same inputs produce the same manifest.

use std::fs::{self, File};
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
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
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    fn digest(root: &Path, path: &Path) -> io::Result<FileDigest> {
        let rel = path.strip_prefix(root).unwrap_or(path).to_path_buf();
        Ok(FileDigest { path: rel, sha256: sha256_file(path)? })
    }

    pub fn input(&mut self, path: &Path) -> io::Result<()> {
        let d = Self::digest(&self.config.output_dir, path)?;
        if !self.inputs.contains(&d) {
            self.inputs.push(d);
        }
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> io::Result<()> {
        let d = Self::digest(&self.config.output_dir, path)?;
        self.outputs.retain(|o| o.path != d.path);
        self.outputs.push(d);
        Ok(())
    }

    /// Writes `manifests/<command>.json` under the output directory.
    pub fn write(&self) -> io::Result<PathBuf> {
        let dir = self.config.output_dir.join("manifests");
        fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{}.json", self.command));
        let json = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(&path, json + "\n")?;
        Ok(path)
    }
}
