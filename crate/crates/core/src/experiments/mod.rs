//! Trial execution for the four coupling conditions, playback recording and
//! replay, per-condition fitness evaluation, and the generational loop.

use crate::entropy;
use crate::genome::GenomeError;
use crate::neural::NEURONS;
use crate::physics::{PlateauReference, Vec2};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use thiserror::Error;

mod evolve;
mod trial;

pub use evolve::{
    evaluate, evolve, ghost_test_from_parts, make_ghost_test, resume, EvolveObserver, Evaluation,
    GenerationProgress, GenerationStats, GhostTestReport, GhostTestTrial, ResumeState, RunResult,
};
pub use trial::{place_agents, run_trial_ghost, run_trial_interactive, run_trial_isolated};

/// Trials per fitness evaluation, one per placement angle.
pub const TRIALS_PER_EVALUATION: usize = 4;

/// Relative placement angle of the partner for each trial.
pub const TRIAL_ANGLES: [f64; TRIALS_PER_EVALUATION] = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];

/// Initial heading of every agent ("to the right").
pub const INITIAL_HEADING: f64 = 0.0;

pub const DEFAULT_INITIAL_DISTANCE: f64 = 20.0;
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_DURATION_STEPS: usize = 10_000;
pub const DEFAULT_POPULATION: usize = 96;
pub const DEFAULT_GENERATIONS: usize = 2000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Genome(#[from] GenomeError),
    #[error("genotype encodes {got} agent(s) but condition `{condition}` needs {expected}")]
    GenotypeArity {
        condition: ConditionKind,
        got: usize,
        expected: usize,
    },
    #[error("non-finite state at step {step} for agent {agent}")]
    NonFinite { step: usize, agent: usize },
    #[error("playback has {got} trial(s), expected {expected}")]
    PlaybackTrialCount { got: usize, expected: usize },
    #[error("playback trial {trial} has {got} step(s), expected {expected}")]
    PlaybackLength {
        trial: usize,
        got: usize,
        expected: usize,
    },
    #[error("trial set has {got} trace(s), expected {expected}")]
    TrialCount { got: usize, expected: usize },
    #[error("agent index {agent} out of range ({agents} agents)")]
    AgentIndex { agent: usize, agents: usize },
    #[error("agent {agent} carries no recorded neural outputs")]
    NoNeuralOutputs { agent: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("condition `{0}` is not an evolvable condition")]
    NotEvolvable(ConditionKind),
    #[error("observer failed: {0}")]
    Observer(String),
}

/// The four coupling conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionKind {
    Interactive,
    GhostTest,
    GhostEvolution,
    Isolated,
}

impl ConditionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConditionKind::Interactive => "interactive",
            ConditionKind::GhostTest => "ghost-test",
            ConditionKind::GhostEvolution => "ghost-evolution",
            ConditionKind::Isolated => "isolated",
        }
    }

    /// Agents encoded per genotype under this condition.
    pub fn agents_per_genotype(&self) -> usize {
        match self {
            ConditionKind::Interactive => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Geometry and integration parameters of a single trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub initial_distance: f64,
    /// Bearing of the partner (or ghost) from the live agent at trial start.
    pub relative_angle: f64,
    pub initial_heading: f64,
    pub duration_steps: usize,
    pub dt: f64,
}

/// Per-step record of one agent over one trial. Ghost agents replay a
/// recording and carry no neural outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTrace {
    pub is_ghost: bool,
    pub positions: Vec<Vec2>,
    pub headings: Vec<f64>,
    pub velocities: Vec<Vec2>,
    pub neuron_outputs: Vec<[f64; NEURONS]>,
    pub emissions: Vec<f64>,
}

impl AgentTrace {
    fn with_capacity(steps: usize, is_ghost: bool) -> Self {
        AgentTrace {
            is_ghost,
            positions: Vec::with_capacity(steps),
            headings: Vec::with_capacity(steps),
            velocities: Vec::with_capacity(steps),
            neuron_outputs: if is_ghost { Vec::new() } else { Vec::with_capacity(steps) },
            emissions: Vec::with_capacity(steps),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Full record of one trial: post-step states, one entry per step. The
/// initial placement is implied by `spec` via [`place_agents`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTrace {
    pub condition: ConditionKind,
    pub spec: TrialSpec,
    pub agents: Vec<AgentTrace>,
}

impl TrialTrace {
    pub fn agent(&self, index: usize) -> Result<&AgentTrace, ExperimentError> {
        self.agents.get(index).ok_or(ExperimentError::AgentIndex {
            agent: index,
            agents: self.agents.len(),
        })
    }
}

/// Recorded behavior of one agent, replayed as a non-sensing ghost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaybackTrial {
    /// Placement angle the recording was made at.
    pub relative_angle: f64,
    pub initial_position: Vec2,
    pub initial_heading: f64,
    pub positions: Vec<Vec2>,
    pub headings: Vec<f64>,
    pub velocities: Vec<Vec2>,
    pub emissions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaybackProvenance {
    pub run_id: String,
    pub generation: usize,
    pub agent_index: usize,
}

/// Ghost recording for one full evaluation (one trial per angle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Playback {
    pub provenance: PlaybackProvenance,
    pub trials: Vec<PlaybackTrial>,
}

impl Playback {
    /// Extract the given agent's recorded behavior from a trial set.
    pub fn from_traces(
        traces: &[TrialTrace],
        agent: usize,
        provenance: PlaybackProvenance,
    ) -> Result<Self, ExperimentError> {
        if traces.len() != TRIALS_PER_EVALUATION {
            return Err(ExperimentError::TrialCount {
                got: traces.len(),
                expected: TRIALS_PER_EVALUATION,
            });
        }
        let trials = traces
            .iter()
            .map(|trace| {
                let track = trace.agent(agent)?;
                let (first, second) = place_agents(&trace.spec);
                let initial = match agent {
                    0 => first,
                    1 => second,
                    _ => {
                        return Err(ExperimentError::AgentIndex {
                            agent,
                            agents: trace.agents.len(),
                        })
                    }
                };
                Ok(PlaybackTrial {
                    relative_angle: trace.spec.relative_angle,
                    initial_position: initial.center,
                    initial_heading: initial.heading,
                    positions: track.positions.clone(),
                    headings: track.headings.clone(),
                    velocities: track.velocities.clone(),
                    emissions: track.emissions.clone(),
                })
            })
            .collect::<Result<Vec<_>, ExperimentError>>()?;
        Ok(Playback { provenance, trials })
    }

    /// Check trial count and per-trial lengths against a trial duration.
    pub fn validate(&self, duration_steps: usize) -> Result<(), ExperimentError> {
        if self.trials.len() != TRIALS_PER_EVALUATION {
            return Err(ExperimentError::PlaybackTrialCount {
                got: self.trials.len(),
                expected: TRIALS_PER_EVALUATION,
            });
        }
        for (index, trial) in self.trials.iter().enumerate() {
            for length in [
                trial.positions.len(),
                trial.headings.len(),
                trial.velocities.len(),
                trial.emissions.len(),
            ] {
                if length != duration_steps {
                    return Err(ExperimentError::PlaybackLength {
                        trial: index,
                        got: length,
                        expected: duration_steps,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Trial geometry shared by every trial of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSettings {
    pub dt: f64,
    pub duration_steps: usize,
    pub initial_distance: f64,
}

impl Default for TrialSettings {
    fn default() -> Self {
        TrialSettings {
            dt: DEFAULT_DT,
            duration_steps: DEFAULT_DURATION_STEPS,
            initial_distance: DEFAULT_INITIAL_DISTANCE,
        }
    }
}

/// Semantic configuration of one evolutionary run. Everything that affects
/// results lives here; execution knobs (parallelism, checkpoint cadence)
/// deliberately do not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub condition: ConditionKind,
    pub population: usize,
    pub generations: usize,
    pub seed: u64,
    pub trial: TrialSettings,
    /// Initial steps of each trial excluded from the fitness histogram.
    pub burn_in_steps: usize,
    pub plateau_reference: PlateauReference,
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.condition == ConditionKind::GhostTest {
            return Err(ExperimentError::NotEvolvable(self.condition));
        }
        let mut problems = Vec::new();
        if self.population < 2 {
            problems.push("population must be at least 2".to_string());
        }
        if self.generations == 0 {
            problems.push("generations must be at least 1".to_string());
        }
        if !(self.trial.dt > 0.0 && self.trial.dt.is_finite()) {
            problems.push(format!("dt must be positive and finite, got {}", self.trial.dt));
        }
        if self.trial.duration_steps == 0 {
            problems.push("duration_steps must be at least 1".to_string());
        }
        if !(self.trial.initial_distance > 0.0 && self.trial.initial_distance.is_finite()) {
            problems.push(format!(
                "initial_distance must be positive and finite, got {}",
                self.trial.initial_distance
            ));
        }
        if self.trial.duration_steps > 0 && self.burn_in_steps >= self.trial.duration_steps {
            problems.push(format!(
                "burn_in_steps {} must be smaller than duration_steps {}",
                self.burn_in_steps, self.trial.duration_steps
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ExperimentError::InvalidConfig(problems.join("; ")))
        }
    }

    /// Spec of the trial at the given index (angle per [`TRIAL_ANGLES`]).
    pub fn trial_spec(&self, trial: usize) -> TrialSpec {
        TrialSpec {
            initial_distance: self.trial.initial_distance,
            relative_angle: TRIAL_ANGLES[trial],
            initial_heading: INITIAL_HEADING,
            duration_steps: self.trial.duration_steps,
            dt: self.trial.dt,
        }
    }
}

/// Pooled normalized neural entropy of one agent over a full trial set,
/// skipping `burn_in` initial steps of every trial. Degenerate (empty)
/// pools report zero.
pub fn trial_set_entropy(
    traces: &[TrialTrace],
    agent: usize,
    burn_in: usize,
) -> Result<f64, ExperimentError> {
    if traces.len() != TRIALS_PER_EVALUATION {
        return Err(ExperimentError::TrialCount {
            got: traces.len(),
            expected: TRIALS_PER_EVALUATION,
        });
    }
    let mut series = Vec::with_capacity(traces.len());
    for trace in traces {
        let track = trace.agent(agent)?;
        if track.neuron_outputs.is_empty() {
            return Err(ExperimentError::NoNeuralOutputs { agent });
        }
        let start = burn_in.min(track.neuron_outputs.len());
        series.push(&track.neuron_outputs[start..]);
    }
    Ok(entropy::pooled_normalized_entropy(series).unwrap_or(0.0))
}

/// Normalized neural entropy of one agent over a single trial.
pub fn single_trial_entropy(
    trace: &TrialTrace,
    agent: usize,
    burn_in: usize,
) -> Result<f64, ExperimentError> {
    let track = trace.agent(agent)?;
    if track.neuron_outputs.is_empty() {
        return Err(ExperimentError::NoNeuralOutputs { agent });
    }
    let start = burn_in.min(track.neuron_outputs.len());
    Ok(entropy::pooled_normalized_entropy([&track.neuron_outputs[start..]]).unwrap_or(0.0))
}
