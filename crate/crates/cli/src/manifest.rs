//! Per-stage manifests: every artifact records the hashes of the files it
//! consumed and produced plus the exact configuration, so a pipeline run
//! can be audited and reproduced file by file.
//!
//! Manifests carry file names, not paths, and no timestamps: two runs with
//! identical inputs and configuration write byte-identical manifests.

use std::io::Read;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct FileStamp {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub stage: &'static str,
    pub tool_version: &'static str,
    pub inputs: Vec<FileStamp>,
    pub outputs: Vec<FileStamp>,
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn new(stage: &'static str, config: serde_json::Value) -> Self {
        Manifest {
            stage,
            tool_version: env!("CARGO_PKG_VERSION"),
            inputs: Vec::new(),
            outputs: Vec::new(),
            config,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> std::io::Result<()> {
        self.inputs.push(stamp(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> std::io::Result<()> {
        self.outputs.push(stamp(path)?);
        Ok(())
    }

    /// Write `<stage>.manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let path = dir.join(format!("{}.manifest.json", self.stage));
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)
    }
}

fn stamp(path: &Path) -> std::io::Result<FileStamp> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(FileStamp { name, sha256: sha256_file(path)? })
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}
