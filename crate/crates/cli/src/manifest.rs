use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the config text, or of the canonical JSON of the inline
    /// parameters when no config file was given.
    pub config_digest: String,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<PathBuf>,
    pub wall_time_s: f64,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct ManifestBuilder {
    command: String,
    config_digest: String,
    seed: Option<u64>,
    outputs: Vec<PathBuf>,
    start: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, config_bytes: &[u8], seed: Option<u64>) -> Self {
        Self {
            command: command.into(),
            config_digest: digest(config_bytes),
            seed,
            outputs: Vec::new(),
            start: Instant::now(),
        }
    }

    pub fn output(&mut self, p: impl Into<PathBuf>) {
        self.outputs.push(p.into());
    }

    pub fn write(self, path: &Path) -> Result<()> {
        let m = RunManifest {
            command: self.command,
            config_digest: self.config_digest,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            outputs: self.outputs,
            wall_time_s: self.start.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&m)?;
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_plain_sha256() {
        assert_eq!(
            digest(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
