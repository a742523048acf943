//! Output files and their manifests.

use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use serde::Serialize;

use emoarc::manifest::{manifest_path_for, Manifest};

pub struct Context {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub json: bool,
    pub command: Vec<String>,
}

impl Context {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Relative output paths live under the output directory.
    pub fn output_path(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.out_dir.join(path)
        }
    }

    /// `out` if given, else `<stem>.csv` or `<stem>.jsonl` depending on --json.
    pub fn table_path(&self, out: Option<&Path>, stem: &str) -> PathBuf {
        match out {
            Some(p) => self.output_path(p),
            None => {
                let ext = if self.json { "jsonl" } else { "csv" };
                self.out_dir.join(format!("{stem}.{ext}"))
            }
        }
    }

    pub fn manifest(&self, seeded: bool, config: &impl Serialize) -> Manifest {
        Manifest::new(
            self.command.clone(),
            if seeded { Some(self.seed()) } else { None },
            serde_json::to_value(config).expect("arguments serialize"),
        )
    }

    /// Writes one output file plus its manifest.
    pub fn write_output(
        &self,
        path: &Path,
        mut manifest: Manifest,
        inputs: &[&Path],
        write: impl FnOnce(BufWriter<File>) -> io::Result<()>,
    ) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write(BufWriter::new(file)).with_context(|| format!("writing {}", path.display()))?;
        for input in inputs {
            manifest
                .add_input(input)
                .with_context(|| format!("hashing {}", input.display()))?;
        }
        manifest.add_output(path)?;
        manifest.write(manifest_path_for(path))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }
}
