//! Run summaries written next to every output: content hashes of inputs and
//! outputs, the effective configuration, counts and skipped ids.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qcurate_core::io::atomic_write;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliResult, ResultExt};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDigest {
    /// File name only, so summaries do not depend on the working directory.
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn digest(path: &Path) -> CliResult<FileDigest> {
    let bytes = std::fs::read(path).or_input(format!("reading {}", path.display()))?;
    Ok(FileDigest {
        file: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub command: String,
    pub inputs: BTreeMap<String, FileDigest>,
    pub outputs: BTreeMap<String, FileDigest>,
    pub config: serde_json::Value,
    pub counts: BTreeMap<String, serde_json::Value>,
    pub skipped: Vec<String>,
}

impl RunSummary {
    pub fn new(command: &str) -> Self {
        RunSummary {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            config: serde_json::Value::Null,
            counts: BTreeMap::new(),
            skipped: Vec::new(),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) -> CliResult<()> {
        self.inputs.insert(name.to_string(), digest(path)?);
        Ok(())
    }

    pub fn output(&mut self, name: &str, path: &Path) -> CliResult<()> {
        self.outputs.insert(name.to_string(), digest(path)?);
        Ok(())
    }

    pub fn config(&mut self, value: &impl Serialize) {
        self.config = serde_json::to_value(value).expect("config serializes");
    }

    pub fn count(&mut self, name: &str, value: impl Serialize) {
        self.counts.insert(
            name.to_string(),
            serde_json::to_value(value).expect("count serializes"),
        );
    }

    pub fn skip(&mut self, id: impl Into<String>) {
        self.skipped.push(id.into());
    }

    /// Writes `<primary>.summary.json` and returns its path.
    pub fn write_for(&mut self, primary: &Path) -> CliResult<PathBuf> {
        self.skipped.sort();
        let mut name = primary.file_name().unwrap_or_default().to_os_string();
        name.push(".summary.json");
        let path = primary.with_file_name(name);
        let mut text = serde_json::to_string_pretty(self).expect("summary serializes");
        text.push('\n');
        atomic_write(&path, text.as_bytes()).or_internal(format!("writing {}", path.display()))?;
        Ok(path)
    }
}
