//! `dyad evolve`: execute one or more evolutionary runs, writing fitness
//! history, checkpoints, the champion genotype, its playback recording and
//! its trial traces. Interrupted runs resume from the latest checkpoint and
//! finish with byte-identical artifacts.

use crate::commands::{load_playback_archive, parse_condition};
use crate::config::{config_hash, FileConfig, PlaybackSource};
use crate::usage_error;
use crate::workspace::{
    epoch_seconds, resolve_workspace, write_fitness_history, RunDir, RunManifest, RunOutputs,
    RunStatus, MANIFEST_FORMAT_VERSION,
};
use anyhow::{Context, Result};
use clap::Args;
use dyad_core::archive::{
    CheckpointFile, GenotypeFile, PlaybackArchive, TraceArchive, FORMAT_VERSION,
};
use dyad_core::experiments::{
    self, ConditionKind, EvolveConfig, EvolveObserver, ExperimentError, GenerationProgress,
    Playback, PlaybackProvenance, ResumeState, RunResult,
};
use std::path::PathBuf;

#[derive(Args)]
pub struct EvolveArgs {
    /// JSON config file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Workspace root (default: $DYAD_WORKSPACE or ./workspace).
    #[arg(long)]
    workspace: Option<PathBuf>,
    /// Condition: interactive | ghost-evolution | isolated.
    #[arg(long, value_parser = parse_condition)]
    condition: Option<ConditionKind>,
    #[arg(long, visible_alias = "pop")]
    population: Option<usize>,
    #[arg(long, visible_alias = "gens")]
    generations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Independent runs; run i uses seed + i.
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// Steps per trial.
    #[arg(long)]
    duration: Option<usize>,
    /// Initial center-to-center distance.
    #[arg(long)]
    distance: Option<f64>,
    /// Trial steps excluded from the fitness histogram.
    #[arg(long)]
    burn_in: Option<usize>,
    /// Playback archive (required for ghost-evolution).
    #[arg(long)]
    playback: Option<PathBuf>,
    /// Evaluation worker threads (default: available cores).
    #[arg(long)]
    parallelism: Option<usize>,
    /// Generations between checkpoints.
    #[arg(long)]
    checkpoint_interval: Option<usize>,
    /// Resume an interrupted run by id (ignores config/semantic flags).
    #[arg(long)]
    resume: Option<String>,
}

struct CheckpointObserver {
    run_dir: PathBuf,
    interval: usize,
    config_hash: String,
    condition: ConditionKind,
    seed: u64,
    quiet: bool,
}

impl EvolveObserver for CheckpointObserver {
    fn on_generation(&mut self, progress: &GenerationProgress<'_>) -> Result<(), ExperimentError> {
        let generation = progress.generation;
        if !self.quiet && (generation.is_multiple_of(self.interval) || generation + 1 == progress.history.len()) {
            eprintln!(
                "  generation {generation}: best {:.6}, mean {:.6}",
                progress.stats.best_fitness, progress.stats.mean_fitness
            );
        }
        if generation > 0 && generation.is_multiple_of(self.interval) {
            // Checkpoint resumes by re-running this generation, so the
            // history stored excludes the row just produced.
            let checkpoint = CheckpointFile {
                format_version: FORMAT_VERSION,
                config_hash: self.config_hash.clone(),
                condition: self.condition,
                seed: self.seed,
                next_generation: generation,
                population: progress.population.to_vec(),
                history: progress.history[..generation].to_vec(),
                best_per_generation: progress.best_per_generation[..generation].to_vec(),
            };
            let path = self.run_dir.join(format!("checkpoints/checkpoint_{generation:06}.json"));
            checkpoint
                .save(&path)
                .map_err(|e| ExperimentError::Observer(e.to_string()))?;
        }
        Ok(())
    }
}

pub fn run(args: EvolveArgs) -> Result<()> {
    let workspace = resolve_workspace(args.workspace.clone());
    std::fs::create_dir_all(&workspace)
        .with_context(|| format!("cannot create workspace {}", workspace.display()))?;

    if let Some(run_id) = &args.resume {
        return resume_run(&workspace, run_id, args.parallelism);
    }

    let mut file = match &args.config {
        Some(path) => FileConfig::load(path).map_err(|e| usage_error(format!("{e:#}")))?,
        None => {
            let condition = args
                .condition
                .ok_or_else(|| usage_error("either --config or --condition is required"))?;
            let seed = args
                .seed
                .ok_or_else(|| usage_error("either --config or --seed is required"))?;
            FileConfig::from_condition_seed(condition, seed)
        }
    };
    if let Some(condition) = args.condition {
        file.condition = condition;
    }
    if let Some(seed) = args.seed {
        file.seed = seed;
    }
    if let Some(population) = args.population {
        file.population = population;
    }
    if let Some(generations) = args.generations {
        file.generations = generations;
    }
    if let Some(runs) = args.runs {
        file.runs = runs;
    }
    if let Some(dt) = args.dt {
        file.dt = dt;
    }
    if let Some(duration) = args.duration {
        file.duration_steps = duration;
    }
    if let Some(distance) = args.distance {
        file.initial_distance = distance;
    }
    if let Some(burn_in) = args.burn_in {
        file.burn_in_steps = burn_in;
    }
    if let Some(playback) = &args.playback {
        file.playback_path = Some(playback.clone());
    }
    if let Some(parallelism) = args.parallelism {
        file.parallelism = Some(parallelism);
    }
    if let Some(interval) = args.checkpoint_interval {
        file.checkpoint_interval = interval;
    }
    if file.runs == 0 {
        return Err(usage_error("--runs must be at least 1"));
    }
    if file.checkpoint_interval == 0 {
        return Err(usage_error("--checkpoint-interval must be at least 1"));
    }

    let playback = match file.condition {
        ConditionKind::GhostEvolution => {
            let path = file.playback_path.clone().ok_or_else(|| {
                usage_error("ghost-evolution requires --playback (or playback_path in the config)")
            })?;
            Some((load_playback_archive(&path)?, path))
        }
        _ => None,
    };

    for run_index in 0..file.runs {
        let core = file.evolve_config(run_index);
        core.validate().map_err(|e| usage_error(e.to_string()))?;
        let (playback_ref, source, path) = match &playback {
            Some(((ghost, source), path)) => (Some(ghost), Some(source.clone()), Some(path.clone())),
            None => (None, None, None),
        };
        execute_run(
            &workspace,
            &core,
            playback_ref,
            source,
            path,
            file.parallelism(),
            file.checkpoint_interval,
        )?;
    }
    Ok(())
}

fn run_identifier(core: &EvolveConfig, hash: &str) -> String {
    format!("{}-s{}-{}", core.condition, core.seed, &hash[..8])
}

fn execute_run(
    workspace: &std::path::Path,
    core: &EvolveConfig,
    playback: Option<&Playback>,
    playback_source: Option<PlaybackSource>,
    playback_path: Option<PathBuf>,
    parallelism: usize,
    checkpoint_interval: usize,
) -> Result<()> {
    let hash = config_hash(core, playback_source.as_ref());
    let run_id = run_identifier(core, &hash);
    let run_dir = RunDir::create(workspace, &run_id)?;
    eprintln!("run {run_id}: {} generations, population {}", core.generations, core.population);

    let mut manifest = RunManifest {
        format_version: MANIFEST_FORMAT_VERSION,
        run_id: run_id.clone(),
        condition: core.condition,
        seed: core.seed,
        config_hash: hash.clone(),
        effective_config: *core,
        parallelism,
        checkpoint_interval,
        playback: playback_source,
        playback_path,
        outputs: RunOutputs::default(),
        status: RunStatus::Running,
        started_at_epoch_s: epoch_seconds(),
        finished_at_epoch_s: None,
        generations_completed: 0,
    };
    run_dir.write_manifest(&manifest)?;

    let mut observer = CheckpointObserver {
        run_dir: run_dir.path.clone(),
        interval: checkpoint_interval,
        config_hash: hash.clone(),
        condition: core.condition,
        seed: core.seed,
        quiet: false,
    };
    let outcome = experiments::evolve(core, playback, parallelism, &mut observer);
    finish_run(&run_dir, &mut manifest, &hash, core, outcome)
}

fn resume_run(workspace: &std::path::Path, run_id: &str, parallelism: Option<usize>) -> Result<()> {
    let run_dir = RunDir::open(workspace, run_id).map_err(|e| usage_error(format!("{e:#}")))?;
    let mut manifest = run_dir.load_manifest().map_err(|e| usage_error(format!("{e:#}")))?;
    if manifest.condition == ConditionKind::GhostTest {
        return Err(usage_error("ghost-test runs are derived artifacts and cannot be resumed"));
    }
    let core = manifest.effective_config;
    let parallelism = parallelism.unwrap_or(manifest.parallelism).max(1);

    let playback = match (&manifest.playback, &manifest.playback_path) {
        (Some(expected), Some(path)) => {
            let (ghost, source) = load_playback_archive(path)?;
            if source.content_hash != expected.content_hash {
                return Err(usage_error(format!(
                    "playback {} changed since the run started (content hash mismatch)",
                    path.display()
                )));
            }
            Some(ghost)
        }
        (None, _) => None,
        (Some(_), None) => {
            return Err(usage_error("manifest records a playback but no path to reload it"))
        }
    };

    let state = match run_dir.latest_checkpoint()? {
        Some(path) => {
            let checkpoint = CheckpointFile::load(&path).map_err(|e| usage_error(e.to_string()))?;
            if checkpoint.config_hash != manifest.config_hash {
                return Err(usage_error(format!(
                    "checkpoint {} belongs to config {}, run is {}",
                    path.display(),
                    checkpoint.config_hash,
                    manifest.config_hash
                )));
            }
            eprintln!("run {run_id}: resuming at generation {}", checkpoint.next_generation);
            ResumeState {
                next_generation: checkpoint.next_generation,
                population: checkpoint.population,
                history: checkpoint.history,
                best_per_generation: checkpoint.best_per_generation,
            }
        }
        None => {
            eprintln!("run {run_id}: no checkpoint found, restarting from generation 0");
            ResumeState {
                next_generation: 0,
                population: Vec::new(),
                history: Vec::new(),
                best_per_generation: Vec::new(),
            }
        }
    };

    manifest.status = RunStatus::Running;
    run_dir.write_manifest(&manifest)?;

    let mut observer = CheckpointObserver {
        run_dir: run_dir.path.clone(),
        interval: manifest.checkpoint_interval,
        config_hash: manifest.config_hash.clone(),
        condition: core.condition,
        seed: core.seed,
        quiet: false,
    };
    let outcome = if state.next_generation == 0 && state.population.is_empty() {
        experiments::evolve(&core, playback.as_ref(), parallelism, &mut observer)
    } else {
        experiments::resume(&core, playback.as_ref(), parallelism, state, &mut observer)
    };
    let hash = manifest.config_hash.clone();
    finish_run(&run_dir, &mut manifest, &hash, &core, outcome)
}

fn finish_run(
    run_dir: &RunDir,
    manifest: &mut RunManifest,
    hash: &str,
    core: &EvolveConfig,
    outcome: Result<RunResult, ExperimentError>,
) -> Result<()> {
    let result = match outcome {
        Ok(result) => result,
        Err(err) => {
            manifest.status = RunStatus::Failed;
            manifest.finished_at_epoch_s = Some(epoch_seconds());
            run_dir.write_manifest(manifest)?;
            return Err(anyhow::Error::new(err).context(format!("run {} failed", run_dir.run_id)));
        }
    };

    write_fitness_history(&run_dir.fitness_history_path(), hash, &result.history)?;

    let final_generation = result.history.last().map(|s| s.generation).unwrap_or(0);
    GenotypeFile {
        format_version: FORMAT_VERSION,
        config_hash: hash.to_string(),
        n_agents: result.best_genotype.agent_count(),
        generation: final_generation,
        seed: core.seed,
        genes: result.best_genotype.genes().to_vec(),
    }
    .save(&run_dir.best_genotype_path())
    .context("write best genotype")?;

    // Recording of the champion: the partner agent for interactive pairs,
    // the single agent otherwise.
    let ghost_agent = if core.condition == ConditionKind::Interactive { 1 } else { 0 };
    let playback = Playback::from_traces(
        &result.best_evaluation.traces,
        ghost_agent,
        PlaybackProvenance {
            run_id: run_dir.run_id.clone(),
            generation: final_generation,
            agent_index: ghost_agent,
        },
    )
    .context("extract champion playback")?;
    PlaybackArchive::new(hash.to_string(), playback)
        .save(&run_dir.playback_path())
        .context("write playback")?;

    TraceArchive {
        format_version: FORMAT_VERSION,
        config_hash: hash.to_string(),
        run_id: run_dir.run_id.clone(),
        condition: core.condition,
        seed: core.seed,
        generation: final_generation,
        fitness: result.best_fitness,
        agent_entropies: result.best_evaluation.agent_entropies.clone(),
        traces: result.best_evaluation.traces.clone(),
    }
    .save(&run_dir.traces_path())
    .context("write traces")?;

    manifest.status = RunStatus::Complete;
    manifest.finished_at_epoch_s = Some(epoch_seconds());
    manifest.generations_completed = result.history.len();
    run_dir.write_manifest(manifest)?;

    println!(
        "run {}: complete, best fitness {:.6} after {} generations",
        run_dir.run_id,
        result.best_fitness,
        result.history.len()
    );
    Ok(())
}
