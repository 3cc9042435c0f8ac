//! Per-condition fitness evaluation, the generational loop, and the
//! ghost-test procedure.

use super::{
    run_trial_ghost, run_trial_interactive, run_trial_isolated, single_trial_entropy,
    trial_set_entropy, ConditionKind, EvolveConfig, ExperimentError, Playback,
    PlaybackProvenance, TrialSpec, TrialTrace, TRIALS_PER_EVALUATION,
};
use crate::genome::{decode, next_generation, Genotype, ScalingSpec};
use crate::rng::{derive_rng, DOMAIN_GHOST_TEST, DOMAIN_INIT_POPULATION, DOMAIN_REPRODUCTION};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Outcome of evaluating one genotype over its trial set.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Fitness in `[0, 1]`; zero with a diagnostic when a trial aborted.
    pub fitness: f64,
    /// Pooled entropy per evaluated agent (two for interactive pairs).
    pub agent_entropies: Vec<f64>,
    pub traces: Vec<TrialTrace>,
    pub failure: Option<String>,
}

fn aborted(message: String) -> Evaluation {
    Evaluation {
        fitness: 0.0,
        agent_entropies: Vec::new(),
        traces: Vec::new(),
        failure: Some(message),
    }
}

/// Evaluate one genotype under the config's condition: run the four trials
/// and derive fitness from pooled neural entropy (mean over both agents for
/// interactive pairs, the live/isolated agent's entropy otherwise).
///
/// Structural problems (wrong genotype arity, missing or mismatched
/// playback) are errors; a numerically aborted trial yields fitness zero
/// with a diagnostic.
pub fn evaluate(
    genotype: &Genotype,
    cfg: &EvolveConfig,
    playback: Option<&Playback>,
) -> Result<Evaluation, ExperimentError> {
    let params = decode(genotype, &ScalingSpec::standard())?;
    let expected = cfg.condition.agents_per_genotype();
    if params.len() != expected {
        return Err(ExperimentError::GenotypeArity {
            condition: cfg.condition,
            got: params.len(),
            expected,
        });
    }

    let mut traces = Vec::with_capacity(TRIALS_PER_EVALUATION);
    for trial in 0..TRIALS_PER_EVALUATION {
        let spec: TrialSpec = cfg.trial_spec(trial);
        let result = match cfg.condition {
            ConditionKind::Interactive => {
                run_trial_interactive(&params[0], &params[1], &spec, cfg.plateau_reference)
            }
            ConditionKind::GhostEvolution => {
                let ghost = playback.ok_or_else(|| {
                    ExperimentError::InvalidConfig(
                        "ghost-evolution requires a playback".to_string(),
                    )
                })?;
                run_trial_ghost(&params[0], ghost, trial, &spec, cfg.plateau_reference)
            }
            ConditionKind::Isolated => run_trial_isolated(&params[0], &spec),
            ConditionKind::GhostTest => {
                return Err(ExperimentError::NotEvolvable(cfg.condition))
            }
        };
        match result {
            Ok(mut trace) => {
                trace.condition = cfg.condition;
                traces.push(trace);
            }
            Err(err @ ExperimentError::NonFinite { .. }) => {
                return Ok(aborted(format!("trial {trial} aborted: {err}")));
            }
            Err(err) => return Err(err),
        }
    }

    let agents = match cfg.condition {
        ConditionKind::Interactive => 2,
        _ => 1,
    };
    let mut agent_entropies = Vec::with_capacity(agents);
    for agent in 0..agents {
        agent_entropies.push(trial_set_entropy(&traces, agent, cfg.burn_in_steps)?);
    }
    let fitness = agent_entropies.iter().sum::<f64>() / agent_entropies.len() as f64;

    Ok(Evaluation {
        fitness,
        agent_entropies,
        traces,
        failure: None,
    })
}

/// Per-generation summary recorded into the fitness history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_index: usize,
    pub failed_evaluations: usize,
}

/// Completed run: history, lineage of generation champions, and the final
/// champion re-evaluated with full traces.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: EvolveConfig,
    pub history: Vec<GenerationStats>,
    pub best_per_generation: Vec<Genotype>,
    pub final_population: Vec<Genotype>,
    pub best_genotype: Genotype,
    pub best_fitness: f64,
    pub best_evaluation: Evaluation,
}

/// State needed to continue an interrupted run.
#[derive(Debug, Clone)]
pub struct ResumeState {
    pub next_generation: usize,
    pub population: Vec<Genotype>,
    pub history: Vec<GenerationStats>,
    pub best_per_generation: Vec<Genotype>,
}

/// Everything an observer may inspect after a generation completes.
///
/// `population` is the population the reported generation evaluated, so a
/// checkpoint taken here resumes by re-running this generation; `history`
/// and `best_per_generation` include the reported generation as their last
/// entry.
pub struct GenerationProgress<'a> {
    pub generation: usize,
    pub stats: &'a GenerationStats,
    pub population: &'a [Genotype],
    pub history: &'a [GenerationStats],
    pub best_per_generation: &'a [Genotype],
}

/// Hook called once per completed generation (checkpointing, logging).
pub trait EvolveObserver {
    fn on_generation(&mut self, progress: &GenerationProgress<'_>) -> Result<(), ExperimentError> {
        let _ = progress;
        Ok(())
    }
}

impl EvolveObserver for () {}

fn initial_population(cfg: &EvolveConfig) -> Vec<Genotype> {
    let mut rng = derive_rng(cfg.seed, DOMAIN_INIT_POPULATION, 0);
    let agents = cfg.condition.agents_per_genotype();
    (0..cfg.population)
        .map(|_| Genotype::random(agents, &mut rng))
        .collect()
}

fn validate_playback(
    cfg: &EvolveConfig,
    playback: Option<&Playback>,
) -> Result<(), ExperimentError> {
    if cfg.condition == ConditionKind::GhostEvolution {
        let ghost = playback.ok_or_else(|| {
            ExperimentError::InvalidConfig("ghost-evolution requires a playback".to_string())
        })?;
        ghost.validate(cfg.trial.duration_steps)?;
    }
    Ok(())
}

/// Run the generational loop from scratch.
pub fn evolve(
    cfg: &EvolveConfig,
    playback: Option<&Playback>,
    parallelism: usize,
    observer: &mut dyn EvolveObserver,
) -> Result<RunResult, ExperimentError> {
    cfg.validate()?;
    validate_playback(cfg, playback)?;
    let state = ResumeState {
        next_generation: 0,
        population: initial_population(cfg),
        history: Vec::new(),
        best_per_generation: Vec::new(),
    };
    run_loop(cfg, playback, parallelism, state, observer)
}

/// Continue an interrupted run from checkpointed state. A resumed run
/// produces exactly the history an uninterrupted run would have.
pub fn resume(
    cfg: &EvolveConfig,
    playback: Option<&Playback>,
    parallelism: usize,
    state: ResumeState,
    observer: &mut dyn EvolveObserver,
) -> Result<RunResult, ExperimentError> {
    cfg.validate()?;
    validate_playback(cfg, playback)?;
    if state.population.len() != cfg.population {
        return Err(ExperimentError::InvalidConfig(format!(
            "checkpoint population {} does not match configured population {}",
            state.population.len(),
            cfg.population
        )));
    }
    if state.next_generation != state.history.len()
        || state.next_generation != state.best_per_generation.len()
    {
        return Err(ExperimentError::InvalidConfig(format!(
            "checkpoint generation {} inconsistent with {} history rows",
            state.next_generation,
            state.history.len()
        )));
    }
    if state.next_generation > cfg.generations {
        return Err(ExperimentError::InvalidConfig(format!(
            "checkpoint generation {} beyond configured {} generations",
            state.next_generation, cfg.generations
        )));
    }
    run_loop(cfg, playback, parallelism, state, observer)
}

fn run_loop(
    cfg: &EvolveConfig,
    playback: Option<&Playback>,
    parallelism: usize,
    state: ResumeState,
    observer: &mut dyn EvolveObserver,
) -> Result<RunResult, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| ExperimentError::InvalidConfig(format!("thread pool: {e}")))?;

    let ResumeState {
        next_generation: start_generation,
        mut population,
        mut history,
        mut best_per_generation,
    } = state;

    for generation in start_generation..cfg.generations {
        let evaluations: Vec<Result<Evaluation, ExperimentError>> = pool.install(|| {
            population
                .par_iter()
                .map(|genotype| evaluate(genotype, cfg, playback))
                .collect()
        });
        let mut fitnesses = Vec::with_capacity(population.len());
        let mut failed = 0;
        for evaluation in evaluations {
            let evaluation = evaluation?;
            if evaluation.failure.is_some() {
                failed += 1;
            }
            fitnesses.push(evaluation.fitness);
        }
        let mut best_index = 0;
        for (index, &fitness) in fitnesses.iter().enumerate() {
            if fitness.total_cmp(&fitnesses[best_index]).is_gt() {
                best_index = index;
            }
        }
        let stats = GenerationStats {
            generation,
            best_fitness: fitnesses[best_index],
            mean_fitness: fitnesses.iter().sum::<f64>() / fitnesses.len() as f64,
            best_index,
            failed_evaluations: failed,
        };
        history.push(stats.clone());
        best_per_generation.push(population[best_index].clone());
        observer.on_generation(&GenerationProgress {
            generation,
            stats: &stats,
            population: &population,
            history: &history,
            best_per_generation: &best_per_generation,
        })?;

        if generation + 1 < cfg.generations {
            let mut rng = derive_rng(cfg.seed, DOMAIN_REPRODUCTION, generation as u64);
            population = next_generation(&population, &fitnesses, &mut rng)?;
        }
    }

    let best_genotype = best_per_generation
        .last()
        .cloned()
        .ok_or_else(|| ExperimentError::InvalidConfig("run produced no generations".to_string()))?;
    let best_fitness = history.last().map(|s| s.best_fitness).unwrap_or(0.0);
    let best_evaluation = evaluate(&best_genotype, cfg, playback)?;

    Ok(RunResult {
        config: *cfg,
        history,
        best_per_generation,
        final_population: population,
        best_genotype,
        best_fitness,
        best_evaluation,
    })
}

/// One ghost-test trial row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostTestTrial {
    pub trial: usize,
    /// Angle the replayed recording was made at.
    pub recorded_angle: f64,
    /// Freshly drawn placement angle, always different from the recorded one.
    pub test_angle: f64,
    /// Live-agent entropy over this single trial.
    pub entropy: f64,
}

/// Ghost-test outcome for one evolved interactive pair.
#[derive(Debug, Clone)]
pub struct GhostTestReport {
    pub seed: u64,
    pub live_agent: usize,
    pub ghost_agent: usize,
    /// Live-agent entropy pooled over the four ghost trials.
    pub pooled_entropy: f64,
    /// The same agent's pooled entropy from its interactive evaluation.
    pub interactive_entropy: f64,
    pub trials: Vec<GhostTestTrial>,
    pub traces: Vec<TrialTrace>,
}

/// Re-test the champion pair of an interactive run against a replay of one
/// of its agents, from placement angles that differ from the recorded ones.
pub fn make_ghost_test(
    run: &RunResult,
    ghost_agent: usize,
    seed: u64,
) -> Result<GhostTestReport, ExperimentError> {
    ghost_test_from_parts(
        &run.best_genotype,
        &run.best_evaluation.traces,
        &run.config,
        run.history.last().map(|s| s.generation).unwrap_or(0),
        ghost_agent,
        seed,
    )
}

/// [`make_ghost_test`] over loaded artifacts: the champion genotype and its
/// recorded interactive trial set.
pub fn ghost_test_from_parts(
    genotype: &Genotype,
    interactive_traces: &[TrialTrace],
    cfg: &EvolveConfig,
    recorded_generation: usize,
    ghost_agent: usize,
    seed: u64,
) -> Result<GhostTestReport, ExperimentError> {
    if cfg.condition != ConditionKind::Interactive {
        return Err(ExperimentError::InvalidConfig(format!(
            "ghost-test needs an interactive run, got `{}`",
            cfg.condition
        )));
    }
    if ghost_agent > 1 {
        return Err(ExperimentError::AgentIndex {
            agent: ghost_agent,
            agents: 2,
        });
    }
    let live_agent = 1 - ghost_agent;
    let playback = Playback::from_traces(
        interactive_traces,
        ghost_agent,
        PlaybackProvenance {
            run_id: format!("seed-{}", cfg.seed),
            generation: recorded_generation,
            agent_index: ghost_agent,
        },
    )?;
    playback.validate(cfg.trial.duration_steps)?;
    let live_params = decode(genotype, &ScalingSpec::standard())?[live_agent];

    let mut trials = Vec::with_capacity(TRIALS_PER_EVALUATION);
    let mut traces = Vec::with_capacity(TRIALS_PER_EVALUATION);
    for trial in 0..TRIALS_PER_EVALUATION {
        let recorded_angle = playback.trials[trial].relative_angle;
        let alternatives: Vec<f64> = super::TRIAL_ANGLES
            .iter()
            .copied()
            .filter(|&angle| angle != recorded_angle)
            .collect();
        let mut rng = derive_rng(seed, DOMAIN_GHOST_TEST, trial as u64);
        let test_angle = alternatives[rand::Rng::random_range(&mut rng, 0..alternatives.len())];
        let mut spec = cfg.trial_spec(trial);
        spec.relative_angle = test_angle;
        let trace = run_trial_ghost(
            &live_params,
            &playback,
            trial,
            &spec,
            cfg.plateau_reference,
        )?;
        let entropy = single_trial_entropy(&trace, 0, cfg.burn_in_steps)?;
        trials.push(GhostTestTrial {
            trial,
            recorded_angle,
            test_angle,
            entropy,
        });
        traces.push(trace);
    }

    let pooled_entropy = trial_set_entropy(&traces, 0, cfg.burn_in_steps)?;
    let interactive_entropy =
        trial_set_entropy(interactive_traces, live_agent, cfg.burn_in_steps)?;

    Ok(GhostTestReport {
        seed,
        live_agent,
        ghost_agent,
        pooled_entropy,
        interactive_entropy,
        trials,
        traces,
    })
}
