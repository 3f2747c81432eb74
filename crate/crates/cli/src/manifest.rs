use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_SCHEMA: &str = "clbench.manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema: &'static str,
    pub run_id: String,
    pub command: String,
    pub tool_version: &'static str,
    pub settings: Value,
    pub seeds: Vec<u64>,
    pub backend_fingerprint: String,
    /// Relative paths of everything the run writes.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, settings: Value, seeds: Vec<u64>, backend_fingerprint: String) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        hasher.update([0]);
        hasher.update(settings.to_string().as_bytes());
        hasher.update([0]);
        hasher.update(backend_fingerprint.as_bytes());
        let run_id = hex::encode(&hasher.finalize()[..6]);
        Self {
            schema: MANIFEST_SCHEMA,
            run_id,
            command: command.to_owned(),
            tool_version: env!("CARGO_PKG_VERSION"),
            settings,
            seeds,
            backend_fingerprint,
            outputs: BTreeMap::new(),
        }
    }

    pub fn output(mut self, name: &str, path: &str) -> Self {
        self.outputs.insert(name.to_owned(), path.to_owned());
        self
    }

    /// `--out` if given, else `runs/<command>-<run_id>`.
    pub fn run_dir(&self, out: Option<&Path>) -> PathBuf {
        out.map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("runs").join(format!("{}-{}", self.command, self.run_id)))
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
