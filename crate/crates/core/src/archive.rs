//! Versioned on-disk schemas: playback archives, trace archives, genotype
//! files and run checkpoints. All files are JSON; floats survive a
//! write/read cycle bit-exactly, and every schema carries a format version
//! plus the semantic config hash of the run that produced it.

use crate::experiments::{
    ConditionKind, GenerationStats, Playback, TrialTrace,
};
use crate::genome::{Genotype, GenomeError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

/// Current version of every schema in this module.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed json in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: format version {got} unsupported (expected {expected})")]
    Version { path: String, got: u32, expected: u32 },
    #[error("{path}: {source}")]
    Genotype {
        path: String,
        #[source]
        source: GenomeError,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> ArchiveError {
    ArchiveError::Io { path: path.display().to_string(), source }
}

fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ArchiveError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer(&mut writer, value).map_err(|e| ArchiveError::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    writer.write_all(b"\n").map_err(|e| io_err(path, e))?;
    writer.flush().map_err(|e| io_err(path, e))
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, ArchiveError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| ArchiveError::Json {
        path: path.display().to_string(),
        source: e,
    })
}

fn check_version(path: &Path, got: u32) -> Result<(), ArchiveError> {
    if got == FORMAT_VERSION {
        Ok(())
    } else {
        Err(ArchiveError::Version {
            path: path.display().to_string(),
            got,
            expected: FORMAT_VERSION,
        })
    }
}

/// Ghost recording with provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaybackArchive {
    pub format_version: u32,
    pub config_hash: String,
    pub playback: Playback,
}

impl PlaybackArchive {
    pub fn new(config_hash: String, playback: Playback) -> Self {
        PlaybackArchive {
            format_version: FORMAT_VERSION,
            config_hash,
            playback,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ArchiveError> {
        save_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self, ArchiveError> {
        let archive: PlaybackArchive = load_json(path)?;
        check_version(path, archive.format_version)?;
        Ok(archive)
    }
}

/// Full trial set of one evaluated genotype (the run champion).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceArchive {
    pub format_version: u32,
    pub config_hash: String,
    pub run_id: String,
    pub condition: ConditionKind,
    pub seed: u64,
    /// Generation the recorded genotype came from.
    pub generation: usize,
    pub fitness: f64,
    pub agent_entropies: Vec<f64>,
    pub traces: Vec<TrialTrace>,
}

impl TraceArchive {
    pub fn save(&self, path: &Path) -> Result<(), ArchiveError> {
        save_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self, ArchiveError> {
        let archive: TraceArchive = load_json(path)?;
        check_version(path, archive.format_version)?;
        Ok(archive)
    }
}

/// Header plus flat gene array; round-trips bit-exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenotypeFile {
    pub format_version: u32,
    pub config_hash: String,
    pub n_agents: usize,
    pub generation: usize,
    pub seed: u64,
    pub genes: Vec<f64>,
}

impl GenotypeFile {
    pub fn save(&self, path: &Path) -> Result<(), ArchiveError> {
        save_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self, ArchiveError> {
        let file: GenotypeFile = load_json(path)?;
        check_version(path, file.format_version)?;
        Ok(file)
    }

    pub fn genotype(&self) -> Result<Genotype, ArchiveError> {
        Genotype::new(self.genes.clone()).map_err(|source| ArchiveError::Genotype {
            path: "<genotype file>".to_string(),
            source,
        })
    }
}

/// Resumable run state. All randomness derives from `(seed, generation)`
/// streams, so seed plus generation index fully determine the RNG state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub format_version: u32,
    pub config_hash: String,
    pub condition: ConditionKind,
    pub seed: u64,
    /// First generation the resumed loop will run.
    pub next_generation: usize,
    pub population: Vec<Genotype>,
    pub history: Vec<GenerationStats>,
    pub best_per_generation: Vec<Genotype>,
}

impl CheckpointFile {
    pub fn save(&self, path: &Path) -> Result<(), ArchiveError> {
        save_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self, ArchiveError> {
        let checkpoint: CheckpointFile = load_json(path)?;
        check_version(path, checkpoint.format_version)?;
        for genotype in checkpoint.population.iter().chain(&checkpoint.best_per_generation) {
            Genotype::new(genotype.genes().to_vec()).map_err(|source| ArchiveError::Genotype {
                path: path.display().to_string(),
                source,
            })?;
        }
        Ok(checkpoint)
    }
}

/// Render a float with 17 significant digits: enough to reproduce the exact
/// f64 on re-parse.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}
