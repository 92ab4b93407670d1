//! Run directories: atomic output writes and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "run_manifest.json";

/// Writes `bytes` to a temp file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub tool_version: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started_at: String,
    pub finished_at: String,
}

/// An open run: collects input digests and output files, then writes the manifest.
pub struct Run {
    command: String,
    dir: PathBuf,
    config: serde_json::Value,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    started_at: String,
}

impl Run {
    pub fn start(command: &str, dir: &Path, config: serde_json::Value) -> CliResult<Run> {
        fs::create_dir_all(dir).map_err(|e| CliError::input(format!("cannot create {}", dir.display()), e))?;
        Ok(Run {
            command: command.to_string(),
            dir: dir.to_path_buf(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_at: chrono::Utc::now().to_rfc3339(),
        })
    }

    /// Reads an input file as UTF-8 and records its digest.
    pub fn read_input(&mut self, path: &Path) -> CliResult<String> {
        let bytes = fs::read(path).map_err(|e| CliError::input(format!("cannot read {}", path.display()), e))?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
        String::from_utf8(bytes).map_err(|e| CliError::input(format!("{} is not UTF-8", path.display()), e))
    }

    /// Atomically writes an output file inside the run directory.
    pub fn write_output(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes).map_err(|e| CliError::input(format!("cannot write {}", path.display()), e))?;
        self.outputs.retain(|o| o.path != name);
        self.outputs.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::input("serialization", e))?;
        text.push('\n');
        self.write_output(name, text.as_bytes())
    }

    pub fn write_jsonl<T: Serialize>(&mut self, name: &str, items: &[T]) -> CliResult<()> {
        let text = volmo_core::jsonl::to_string(items).map_err(|e| CliError::input("serialization", e))?;
        self.write_output(name, text.as_bytes())
    }

    /// Writes the run manifest. The run id depends only on the command, the
    /// config snapshot and the input digests, so identical runs share an id.
    pub fn finish(self) -> CliResult<PathBuf> {
        let mut h = Sha256::new();
        h.update(self.command.as_bytes());
        h.update(self.config.to_string().as_bytes());
        for i in &self.inputs {
            h.update(i.sha256.as_bytes());
        }
        let manifest = RunManifest {
            run_id: hex::encode(&h.finalize()[..8]),
            command: self.command,
            tool_version: volmo_core::VERSION.to_string(),
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
            started_at: self.started_at,
            finished_at: chrono::Utc::now().to_rfc3339(),
        };
        let path = self.dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::input("serialization", e))?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())
            .map_err(|e| CliError::input(format!("cannot write {}", path.display()), e))?;
        Ok(path)
    }
}
