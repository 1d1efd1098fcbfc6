//! Run directories: every artifact is recorded in a manifest with its size
//! and SHA-256, so two runs can be compared file by file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub subcommand: String,
    pub seed: u64,
    pub threads: usize,
    pub files: Vec<FileEntry>,
    /// Wall-clock seconds per stage; the only non-reproducible part of a run.
    pub timings: Vec<(String, f64)>,
}

pub struct RunDir {
    root: PathBuf,
    manifest: Manifest,
    clock: Instant,
}

impl RunDir {
    pub fn create(root: impl Into<PathBuf>, subcommand: &str, seed: u64) -> CliResult<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        Ok(RunDir {
            root,
            manifest: Manifest {
                subcommand: subcommand.into(),
                seed,
                threads: rayon::current_num_threads(),
                files: Vec::new(),
                timings: Vec::new(),
            },
            clock: Instant::now(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, data: impl AsRef<[u8]>) -> CliResult<()> {
        let data = data.as_ref();
        let path = self.root.join(name);
        fs::write(&path, data).map_err(|e| CliError::io(&path, e))?;
        self.manifest.files.retain(|f| f.name != name);
        self.manifest.files.push(FileEntry {
            name: name.into(),
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(data)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(value).expect("value serializes");
        s.push('\n');
        self.write(name, s)
    }

    /// Closes the current stage and starts timing the next one.
    pub fn lap(&mut self, stage: &str) {
        self.manifest.timings.push((stage.into(), self.clock.elapsed().as_secs_f64()));
        self.clock = Instant::now();
    }

    pub fn finish(self) -> CliResult<PathBuf> {
        let mut s = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        s.push('\n');
        let path = self.root.join("manifest.json");
        fs::write(&path, s).map_err(|e| CliError::io(&path, e))?;
        Ok(self.root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_records_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = RunDir::create(dir.path().join("r"), "cf", 1).unwrap();
        run.write("a.txt", "abc").unwrap();
        run.write("a.txt", "abc").unwrap();
        let root = run.finish().unwrap();
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(root.join("manifest.json")).unwrap()).unwrap();
        let files = m["files"].as_array().unwrap();
        assert_eq!(files.len(), 1);
        assert_eq!(files[0]["bytes"], 3);
        assert_eq!(
            files[0]["sha256"],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
