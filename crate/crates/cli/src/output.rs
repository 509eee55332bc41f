//! Output files with rollback, and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use ccreport::Error;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

pub fn hash_file(path: &Path) -> Result<FileHash, Error> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(FileHash {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

#[derive(Debug, Serialize)]
pub struct Manifest<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub config: C,
    pub warnings: Vec<String>,
}

impl<C: Serialize> Manifest<C> {
    pub fn new(command: &'static str, inputs: Vec<FileHash>, config: C) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs,
            outputs: Vec::new(),
            config,
            warnings: Vec::new(),
        }
    }
}

/// Collects written files; unless committed, they are removed on drop.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<(PathBuf, String)>,
    committed: bool,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, Error> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, Error> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push((path.clone(), sha256_hex(contents.as_bytes())));
        Ok(path)
    }

    pub fn hashes(&self) -> Vec<FileHash> {
        self.written
            .iter()
            .map(|(p, h)| FileHash {
                path: p.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                sha256: h.clone(),
            })
            .collect()
    }

    /// Writes the manifest listing every output so far, then keeps all files.
    pub fn commit<C: Serialize>(mut self, name: &str, mut manifest: Manifest<C>) -> Result<Vec<PathBuf>, Error> {
        manifest.outputs = self.hashes();
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        self.write(name, &text)?;
        self.committed = true;
        Ok(self.written.iter().map(|(p, _)| p.clone()).collect())
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.committed {
            for (path, _) in &self.written {
                let _ = fs::remove_file(path);
            }
        }
    }
}
