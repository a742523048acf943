//! Run manifests: what produced an output, from which inputs.
//!
//! Manifests carry no timestamps or host details, so identical runs yield
//! byte-identical manifests.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref();
        let data = fs::read(path)?;
        Ok(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&data),
            bytes: data.len() as u64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// The producing command line, program name excluded.
    pub command: Vec<String>,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl Manifest {
    pub fn new(command: Vec<String>, seed: Option<u64>, config: serde_json::Value) -> Self {
        Manifest {
            tool: "emoarc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: impl AsRef<Path>) -> io::Result<()> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: impl AsRef<Path>) -> io::Result<()> {
        self.outputs.push(FileDigest::of(path)?);
        Ok(())
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> io::Result<()> {
        fs::write(path, self.to_json())
    }
}

/// `<output>.manifest.json` next to an output file.
pub fn manifest_path_for(output: impl AsRef<Path>) -> PathBuf {
    let output = output.as_ref();
    let mut name = output
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_else(|| "output".into());
    name.push(".manifest.json");
    output.with_file_name(name)
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}
