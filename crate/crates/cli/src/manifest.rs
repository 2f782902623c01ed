use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

/// Provenance of one command invocation; kept apart from reports so the
/// reports stay byte-reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    pub tool_version: String,
    pub output_dir: PathBuf,
    /// Files written, relative to `output_dir`.
    pub outputs: Vec<String>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub wall_time_secs: f64,
}

pub const MANIFEST_NAME: &str = "run_manifest.json";

pub(crate) fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

impl RunManifest {
    pub(crate) fn start(command: &str, config_path: Option<&Path>, seed: u64, output_dir: &Path) -> Self {
        let now = unix_now();
        RunManifest {
            command: command.to_string(),
            config_path: config_path.map(Path::to_path_buf),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            output_dir: output_dir.to_path_buf(),
            outputs: Vec::new(),
            started_unix: now,
            finished_unix: now,
            wall_time_secs: 0.0,
        }
    }

    pub(crate) fn finish(mut self) -> anyhow::Result<()> {
        self.finished_unix = unix_now();
        self.wall_time_secs = self.finished_unix - self.started_unix;
        for f in &self.outputs {
            anyhow::ensure!(self.output_dir.join(f).exists(), "expected output {f} is missing");
        }
        let path = self.output_dir.join(MANIFEST_NAME);
        std::fs::write(&path, serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(())
    }

    pub fn read(dir: &Path) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_NAME))?)?)
    }
}
