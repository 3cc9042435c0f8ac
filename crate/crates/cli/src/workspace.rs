//! Workspace layout, run manifests and CSV writing.
//!
//! One directory per run under the workspace root:
//!
//! ```text
//! <workspace>/<run-id>/
//!   manifest.json          status, config hash, effective config, paths
//!   fitness_history.csv    one row per generation
//!   best_genotype.json     final-generation champion
//!   playback.json          champion recording (partner agent for pairs)
//!   traces.json            champion trial set
//!   checkpoints/           checkpoint_<generation>.json
//! ```

use crate::config::PlaybackSource;
use anyhow::{bail, Context, Result};
use dyad_core::archive::format_float;
use dyad_core::experiments::{ConditionKind, EvolveConfig, GenerationStats};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;
pub const WORKSPACE_ENV: &str = "DYAD_WORKSPACE";
pub const DEFAULT_WORKSPACE: &str = "workspace";

/// Workspace root: `--workspace` flag, then `DYAD_WORKSPACE`, then
/// `./workspace`.
pub fn resolve_workspace(flag: Option<PathBuf>) -> PathBuf {
    if let Some(path) = flag {
        return path;
    }
    if let Ok(path) = std::env::var(WORKSPACE_ENV) {
        if !path.is_empty() {
            return PathBuf::from(path);
        }
    }
    PathBuf::from(DEFAULT_WORKSPACE)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

/// Artifact paths relative to the run directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutputs {
    pub fitness_history: String,
    pub best_genotype: String,
    pub playback: String,
    pub traces: String,
    pub checkpoints_dir: String,
}

impl Default for RunOutputs {
    fn default() -> Self {
        RunOutputs {
            fitness_history: "fitness_history.csv".to_string(),
            best_genotype: "best_genotype.json".to_string(),
            playback: "playback.json".to_string(),
            traces: "traces.json".to_string(),
            checkpoints_dir: "checkpoints".to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub run_id: String,
    pub condition: ConditionKind,
    pub seed: u64,
    pub config_hash: String,
    pub effective_config: EvolveConfig,
    pub parallelism: usize,
    pub checkpoint_interval: usize,
    pub playback: Option<PlaybackSource>,
    /// Where the consumed playback can be reloaded from on resume.
    pub playback_path: Option<PathBuf>,
    pub outputs: RunOutputs,
    pub status: RunStatus,
    pub started_at_epoch_s: u64,
    pub finished_at_epoch_s: Option<u64>,
    pub generations_completed: usize,
}

pub fn epoch_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub struct RunDir {
    pub path: PathBuf,
    pub run_id: String,
}

impl RunDir {
    pub fn create(workspace: &Path, run_id: &str) -> Result<Self> {
        let path = workspace.join(run_id);
        std::fs::create_dir_all(path.join("checkpoints"))
            .with_context(|| format!("cannot create run directory {}", path.display()))?;
        Ok(RunDir {
            path,
            run_id: run_id.to_string(),
        })
    }

    pub fn open(workspace: &Path, run_id: &str) -> Result<Self> {
        let path = workspace.join(run_id);
        if !path.join("manifest.json").is_file() {
            bail!("run `{run_id}` not found under {}", workspace.display());
        }
        Ok(RunDir {
            path,
            run_id: run_id.to_string(),
        })
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.path.join("manifest.json")
    }

    pub fn fitness_history_path(&self) -> PathBuf {
        self.path.join("fitness_history.csv")
    }

    pub fn best_genotype_path(&self) -> PathBuf {
        self.path.join("best_genotype.json")
    }

    pub fn playback_path(&self) -> PathBuf {
        self.path.join("playback.json")
    }

    pub fn traces_path(&self) -> PathBuf {
        self.path.join("traces.json")
    }

    pub fn checkpoints_dir(&self) -> PathBuf {
        self.path.join("checkpoints")
    }

    pub fn write_manifest(&self, manifest: &RunManifest) -> Result<()> {
        let text = serde_json::to_string_pretty(manifest).context("manifest serializes")?;
        std::fs::write(self.manifest_path(), text + "\n")
            .with_context(|| format!("cannot write {}", self.manifest_path().display()))
    }

    pub fn load_manifest(&self) -> Result<RunManifest> {
        let text = std::fs::read_to_string(self.manifest_path())
            .with_context(|| format!("cannot read {}", self.manifest_path().display()))?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .with_context(|| format!("invalid manifest {}", self.manifest_path().display()))?;
        if manifest.format_version != MANIFEST_FORMAT_VERSION {
            bail!(
                "manifest {}: format version {} unsupported",
                self.manifest_path().display(),
                manifest.format_version
            );
        }
        Ok(manifest)
    }

    /// Checkpoint with the highest generation, if any.
    pub fn latest_checkpoint(&self) -> Result<Option<PathBuf>> {
        let dir = self.checkpoints_dir();
        if !dir.is_dir() {
            return Ok(None);
        }
        let mut best: Option<(usize, PathBuf)> = None;
        for entry in std::fs::read_dir(&dir)
            .with_context(|| format!("cannot list {}", dir.display()))?
        {
            let path = entry?.path();
            let name = match path.file_stem().and_then(|s| s.to_str()) {
                Some(name) => name,
                None => continue,
            };
            if let Some(number) = name.strip_prefix("checkpoint_") {
                if let Ok(generation) = number.parse::<usize>() {
                    if best.as_ref().map(|(g, _)| generation > *g).unwrap_or(true) {
                        best = Some((generation, path));
                    }
                }
            }
        }
        Ok(best.map(|(_, path)| path))
    }
}

/// List run ids (directories carrying a manifest) under the workspace.
pub fn list_runs(workspace: &Path) -> Result<Vec<String>> {
    let mut runs = Vec::new();
    if !workspace.is_dir() {
        return Ok(runs);
    }
    for entry in std::fs::read_dir(workspace)
        .with_context(|| format!("cannot list {}", workspace.display()))?
    {
        let path = entry?.path();
        if path.is_dir() && path.join("manifest.json").is_file() {
            if let Some(name) = path.file_name().and_then(|s| s.to_str()) {
                runs.push(name.to_string());
            }
        }
    }
    runs.sort();
    Ok(runs)
}

/// Minimal `*` glob match against a run id.
pub fn glob_match(pattern: &str, value: &str) -> bool {
    fn inner(pattern: &[u8], value: &[u8]) -> bool {
        match pattern.split_first() {
            None => value.is_empty(),
            Some((b'*', rest)) => {
                (0..=value.len()).any(|skip| inner(rest, &value[skip..]))
            }
            Some((c, rest)) => value.split_first().map(|(v, tail)| v == c && inner(rest, tail)).unwrap_or(false),
        }
    }
    inner(pattern.as_bytes(), value.as_bytes())
}

/// Write the per-generation fitness history. The leading `#` line carries
/// the format tag and config hash; floats print with 17 significant digits.
pub fn write_fitness_history(
    path: &Path,
    config_hash: &str,
    history: &[GenerationStats],
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# format=fitness-history-v1 config={config_hash}\n"));
    out.push_str("generation,best_fitness,mean_fitness\n");
    for stats in history {
        out.push_str(&format!(
            "{},{},{}\n",
            stats.generation,
            format_float(stats.best_fitness),
            format_float(stats.mean_fitness),
        ));
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

/// Write a CSV with a `# format=... config=...` comment line, a header and
/// pre-rendered rows.
pub fn write_csv(
    path: &Path,
    format_tag: &str,
    config_hash: &str,
    header: &str,
    rows: &[String],
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# format={format_tag} config={config_hash}\n"));
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

/// Render an optional float column (empty when absent).
pub fn optional_float(value: Option<f64>) -> String {
    value.map(format_float).unwrap_or_default()
}
