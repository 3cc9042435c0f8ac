//! Run configuration: file schema, CLI overrides, and the semantic config
//! hash that binds artifacts to the configuration that produced them.

use anyhow::{bail, Context, Result};
use dyad_core::experiments::{
    ConditionKind, EvolveConfig, PlaybackProvenance, TrialSettings, DEFAULT_DT,
    DEFAULT_DURATION_STEPS, DEFAULT_GENERATIONS, DEFAULT_INITIAL_DISTANCE, DEFAULT_POPULATION,
};
use dyad_core::physics::PlateauReference;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const CONFIG_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_CHECKPOINT_INTERVAL: usize = 50;

fn default_format_version() -> u32 {
    CONFIG_FORMAT_VERSION
}
fn default_population() -> usize {
    DEFAULT_POPULATION
}
fn default_generations() -> usize {
    DEFAULT_GENERATIONS
}
fn default_runs() -> usize {
    1
}
fn default_dt() -> f64 {
    DEFAULT_DT
}
fn default_duration() -> usize {
    DEFAULT_DURATION_STEPS
}
fn default_distance() -> f64 {
    DEFAULT_INITIAL_DISTANCE
}
fn default_checkpoint_interval() -> usize {
    DEFAULT_CHECKPOINT_INTERVAL
}

/// On-disk run configuration. Unknown keys are rejected so typos cannot
/// silently fall back to defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default = "default_format_version")]
    pub format_version: u32,
    pub condition: ConditionKind,
    pub seed: u64,
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_generations")]
    pub generations: usize,
    /// Independent runs; run `i` uses `seed + i`.
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_duration")]
    pub duration_steps: usize,
    #[serde(default = "default_distance")]
    pub initial_distance: f64,
    #[serde(default)]
    pub burn_in_steps: usize,
    #[serde(default)]
    pub plateau_reference: PlateauReference,
    /// Playback archive path; required for the ghost-evolution condition.
    #[serde(default)]
    pub playback_path: Option<PathBuf>,
    /// Worker threads for fitness evaluation; default = available cores.
    #[serde(default)]
    pub parallelism: Option<usize>,
    #[serde(default = "default_checkpoint_interval")]
    pub checkpoint_interval: usize,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: FileConfig = serde_json::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))?;
        if config.format_version != CONFIG_FORMAT_VERSION {
            bail!(
                "config {}: format version {} unsupported (expected {})",
                path.display(),
                config.format_version,
                CONFIG_FORMAT_VERSION
            );
        }
        Ok(config)
    }

    pub fn from_condition_seed(condition: ConditionKind, seed: u64) -> Self {
        FileConfig {
            format_version: CONFIG_FORMAT_VERSION,
            condition,
            seed,
            population: default_population(),
            generations: default_generations(),
            runs: default_runs(),
            dt: default_dt(),
            duration_steps: default_duration(),
            initial_distance: default_distance(),
            burn_in_steps: 0,
            plateau_reference: PlateauReference::default(),
            playback_path: None,
            parallelism: None,
            checkpoint_interval: default_checkpoint_interval(),
        }
    }

    /// Semantic config of run `index` (seeds advance per run).
    pub fn evolve_config(&self, index: usize) -> EvolveConfig {
        EvolveConfig {
            condition: self.condition,
            population: self.population,
            generations: self.generations,
            seed: self.seed + index as u64,
            trial: TrialSettings {
                dt: self.dt,
                duration_steps: self.duration_steps,
                initial_distance: self.initial_distance,
            },
            burn_in_steps: self.burn_in_steps,
            plateau_reference: self.plateau_reference,
        }
    }

    pub fn parallelism(&self) -> usize {
        self.parallelism
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
            .max(1)
    }
}

/// Identity of the playback a run consumed; part of the semantic hash.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaybackSource {
    pub provenance: PlaybackProvenance,
    pub content_hash: String,
}

#[derive(Serialize)]
struct HashInput<'a> {
    config: &'a EvolveConfig,
    playback: Option<&'a PlaybackSource>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(digest.len() * 2);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// Hash of everything that determines a run's results: the semantic config
/// plus the identity of the playback it replays. Execution knobs
/// (parallelism, checkpoint cadence, paths) are deliberately excluded.
pub fn config_hash(config: &EvolveConfig, playback: Option<&PlaybackSource>) -> String {
    let input = HashInput { config, playback };
    sha256_hex(serde_json::to_string(&input).expect("config serializes").as_bytes())
}
