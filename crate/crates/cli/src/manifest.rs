//! Per-stage manifest: content hashes of inputs and outputs, no timestamps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ensemble_forecast::rng::sha256_hex;
use serde::Serialize;

use crate::CliError;

pub const TOOL: &str = "efc";

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    /// Paths relative to the output root.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

pub fn hash_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

fn label(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

impl Manifest {
    pub fn new(command: &str, config_hash: &str, seed: u64) -> Self {
        Self {
            tool: TOOL,
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, root: &Path, path: &Path) -> Result<(), CliError> {
        self.inputs.insert(label(root, path), hash_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, root: &Path, path: &Path) -> Result<(), CliError> {
        self.outputs.insert(label(root, path), hash_file(path)?);
        Ok(())
    }

    pub fn outputs(&mut self, root: &Path, paths: &[PathBuf]) -> Result<(), CliError> {
        paths.iter().try_for_each(|p| self.output(root, p))
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        std::fs::write(&path, text).map_err(|e| CliError::Core(ensemble_forecast::Error::io(&path, e)))?;
        Ok(path)
    }
}
