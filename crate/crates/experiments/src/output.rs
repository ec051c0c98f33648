//! CSV results and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Collects the files of one run and finally writes `manifest.json`.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl OutputDir {
    pub fn create(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(OutputDir { dir: dir.as_ref().to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// One header row from the field names, then one line per record.
    pub fn write_csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        self.write_bytes(name, &bytes)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.retain(|f| f.file != name);
        self.files.push(OutputFile { file: name.to_string(), bytes: bytes.len(), sha256: hex(&Sha256::digest(bytes)) });
        Ok(())
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.files
    }

    /// Writes `manifest.json` with the experiment name, code version, the
    /// parsed config and the list of outputs.
    pub fn finish<C: Serialize>(self, experiment: &str, config: &C) -> Result<PathBuf> {
        let manifest = serde_json::json!({
            "experiment": experiment,
            "code_version": CODE_VERSION,
            "config": config,
            "outputs": self.files,
        });
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
