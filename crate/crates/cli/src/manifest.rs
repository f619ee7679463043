use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct Manifest {
    mode: &'static str,
    version: &'static str,
    config: Option<PathBuf>,
    /// SHA-256 of the raw config bytes (of the empty string without one).
    config_sha256: String,
    seed: u64,
    files: Vec<String>,
    status: &'static str,
    exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl Manifest {
    pub fn new(mode: &'static str, raw_config: &[u8], seed: u64, config: Option<&Path>) -> Self {
        let digest = Sha256::digest(raw_config);
        Self {
            mode,
            version: env!("CARGO_PKG_VERSION"),
            config: config.map(Path::to_path_buf),
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            seed,
            files: Vec::new(),
            status: "ok",
            exit_code: 0,
            error: None,
        }
    }

    pub fn record(&mut self, name: &str) {
        self.files.push(name.to_string());
    }

    pub fn fail(&mut self, e: &CliError) {
        self.status = "failed";
        self.exit_code = e.code();
        self.error = Some(e.message().to_string());
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::io(&path, e))?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }
}
