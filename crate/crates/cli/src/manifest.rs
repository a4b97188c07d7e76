//! Run manifest: what was run, from which inputs, and what it wrote.

use std::path::{Path, PathBuf};

use cojump::RngStream;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::io::{sha256_file, sha256_hex, write_json};
use crate::{CliError, CliResult};

/// Bumped whenever an output format changes.
pub const ARTIFACT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the output directory for outputs; the bare file name for inputs.
    pub path: PathBuf,
    pub sha256: String,
}

impl FileRecord {
    pub fn of(path: &Path, shown_as: PathBuf) -> CliResult<Self> {
        Ok(Self { path: shown_as, sha256: sha256_file(path)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub seed: Option<RngStream>,
    pub outputs: Vec<FileRecord>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub inputs: Vec<FileRecord>,
    pub stages: Vec<StageRecord>,
    /// False when a stage failed; `error` then holds its message.
    pub complete: bool,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn new(cfg: &RunConfig, inputs: Vec<FileRecord>) -> CliResult<Self> {
        Ok(Self {
            artifact_version: ARTIFACT_VERSION,
            config_hash: config_hash(cfg)?,
            seed: cfg.run.seed,
            inputs,
            stages: Vec::new(),
            complete: false,
            error: None,
        })
    }

    pub fn outputs(&self) -> impl Iterator<Item = &FileRecord> {
        self.stages.iter().flat_map(|s| &s.outputs)
    }

    pub fn read(dir: &Path) -> CliResult<Option<Self>> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        // an unreadable manifest only means the run is not up to date
        Ok(serde_json::from_str(&text).ok())
    }

    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        write_json(&dir.join(MANIFEST_FILE), self)
    }

    /// True when this manifest describes a complete run of `expected` (same
    /// config and inputs) whose outputs are still on disk unchanged.
    pub fn is_current(&self, expected: &RunManifest, dir: &Path) -> CliResult<bool> {
        if !self.complete
            || self.artifact_version != expected.artifact_version
            || self.config_hash != expected.config_hash
            || self.inputs != expected.inputs
        {
            return Ok(false);
        }
        for out in self.outputs() {
            let path = dir.join(&out.path);
            if !path.exists() || sha256_file(&path)? != out.sha256 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// SHA-256 of the configuration's canonical JSON form. The output directory
/// and input locations are excluded; inputs are tracked by checksum.
pub fn config_hash(cfg: &RunConfig) -> CliResult<String> {
    let mut c = cfg.clone();
    c.run.output_dir = PathBuf::new();
    c.run.input = c.run.input.as_ref().map(|_| PathBuf::from("input"));
    c.run.intraday_input = c.run.intraday_input.as_ref().map(|_| PathBuf::from("intraday_input"));
    let json = serde_json::to_vec(&c).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(sha256_hex(&json))
}
