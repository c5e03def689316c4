//! Run manifests: what was run, on which inputs, with which settings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::formats::{write_json, ConfigEcho, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub version: u32,
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub args: Vec<String>,
    pub config: Option<ConfigEcho>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
    pub outcome: String,
    /// Free-form facts needed to reproduce the run, such as which ellipse
    /// parametrization generated a target.
    pub notes: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Collects manifest fields while a command runs.
#[derive(Debug)]
pub struct ManifestBuilder {
    started: Instant,
    manifest: RunManifest,
}

impl ManifestBuilder {
    pub fn start(command: &str, args: Vec<String>) -> Self {
        ManifestBuilder {
            started: Instant::now(),
            manifest: RunManifest {
                version: SCHEMA_VERSION,
                tool: env!("CARGO_PKG_NAME").to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                args,
                config: None,
                inputs: Vec::new(),
                outputs: Vec::new(),
                wall_time_s: 0.0,
                outcome: String::new(),
                notes: BTreeMap::new(),
            },
        }
    }

    pub fn config(&mut self, c: ConfigEcho) {
        self.manifest.config = Some(c);
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        let sha256 = sha256_file(path)?;
        self.manifest.inputs.push(InputDigest { path: path.display().to_string(), sha256 });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.manifest.outputs.push(path.display().to_string());
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.manifest.notes.insert(key.to_string(), value.into());
    }

    /// Writes the manifest to `path` and returns it.
    pub fn finish(mut self, outcome: impl Into<String>, path: &Path) -> CliResult<RunManifest> {
        self.manifest.wall_time_s = self.started.elapsed().as_secs_f64();
        self.manifest.outcome = outcome.into();
        write_json(path, &self.manifest)?;
        Ok(self.manifest)
    }
}

/// `out/manifest.json` for directory outputs.
pub fn manifest_path_in(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

/// `name.manifest.json` next to a single output file `name.ext`.
pub fn manifest_path_beside(file: &Path) -> PathBuf {
    let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    file.with_file_name(format!("{stem}.manifest.json"))
}
