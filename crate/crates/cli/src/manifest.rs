use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::CliResult;

/// Reproducibility record written next to every output file set.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub rng_seed: Option<u64>,
    pub tool_version: String,
    pub started_at_ms: u128,
    pub finished_at_ms: u128,
    pub outputs: Vec<String>,
}

pub(crate) fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Collects output files for one command and writes `manifest.json` last.
pub(crate) struct OutputDir {
    dir: PathBuf,
    manifest: RunManifest,
}

impl OutputDir {
    pub fn create(
        dir: &Path,
        command: &str,
        config: serde_json::Value,
        rng_seed: Option<u64>,
    ) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                command: command.to_string(),
                config,
                rng_seed,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                started_at_ms: now_ms(),
                finished_at_ms: 0,
                outputs: Vec::new(),
            },
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        fs::write(self.dir.join(name), contents)?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<RunManifest> {
        self.manifest.finished_at_ms = now_ms();
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(self.dir.join("manifest.json"), text + "\n")?;
        Ok(self.manifest)
    }
}
