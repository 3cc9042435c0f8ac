//! Genotype encoding and the generational genetic algorithm.
//!
//! Each agent is encoded by [`GENES_PER_AGENT`] genes in `[-1, 1]`, scaled
//! linearly into controller parameters. Selection keeps the top 4% verbatim
//! and fills the remainder by mutating, then crossing over, elite parents.
//!
//! Gene layout per agent (fixed; file formats depend on it):
//!
//! | slot  | parameter                                   | range    |
//! |-------|---------------------------------------------|----------|
//! | 0     | sensor gain                                 | [1, 5]   |
//! | 1     | sensor bias                                 | [-3, 3]  |
//! | 2     | neuron time constant                        | [1, 2]   |
//! | 3     | neuron bias                                 | [-3, 3]  |
//! | 4-12  | recurrent weights, row-major `[into][from]` | [-8, 8]  |
//! | 13-18 | sensor weights, row-major `[neuron][sensor]`| [-8, 8]  |
//! | 19-27 | actuator weights, row-major `[act][neuron]` | [-8, 8]  |
//! | 28    | actuator gain                               | [1, 5]   |
//! | 29    | actuator bias                               | [-3, 3]  |

use crate::neural::{
    ActuatorParams, CtrnnParams, SensorLayerParams, ACTUATORS, NEURONS, SENSORS,
};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Genes encoding one agent.
pub const GENES_PER_AGENT: usize = 2 + 2 + NEURONS * NEURONS + NEURONS * SENSORS + ACTUATORS * NEURONS + 2;

/// Variance of the zero-mean Gaussian mutation noise.
pub const MUTATION_VARIANCE: f64 = 0.1;

/// Per-gene swap probability during crossover.
pub const CROSSOVER_SWAP_PROBABILITY: f64 = 0.1;

/// Fraction of the population kept verbatim each generation.
pub const ELITE_FRACTION: f64 = 0.04;

#[derive(Debug, Error, PartialEq)]
pub enum GenomeError {
    #[error("genotype length {0} is not a multiple of {GENES_PER_AGENT}")]
    BadLength(usize),
    #[error("gene {index} = {value} outside [-1, 1]")]
    GeneOutOfRange { index: usize, value: f64 },
    #[error("genotype lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("population is empty")]
    EmptyPopulation,
    #[error("{got} fitness values for population of {expected}")]
    FitnessMismatch { got: usize, expected: usize },
}

/// Flat vector of normalized genes; one block of [`GENES_PER_AGENT`] per
/// encoded agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genotype {
    genes: Vec<f64>,
}

impl Genotype {
    pub fn new(genes: Vec<f64>) -> Result<Self, GenomeError> {
        if genes.is_empty() || !genes.len().is_multiple_of(GENES_PER_AGENT) {
            return Err(GenomeError::BadLength(genes.len()));
        }
        for (index, &value) in genes.iter().enumerate() {
            if !(-1.0..=1.0).contains(&value) {
                return Err(GenomeError::GeneOutOfRange { index, value });
            }
        }
        Ok(Genotype { genes })
    }

    /// Uniform random genotype for `agents` encoded agents.
    pub fn random<R: Rng + ?Sized>(agents: usize, rng: &mut R) -> Self {
        let genes = (0..agents * GENES_PER_AGENT)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        Genotype { genes }
    }

    pub fn genes(&self) -> &[f64] {
        &self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn agent_count(&self) -> usize {
        self.genes.len() / GENES_PER_AGENT
    }

    fn agent_block(&self, agent: usize) -> &[f64] {
        &self.genes[agent * GENES_PER_AGENT..(agent + 1) * GENES_PER_AGENT]
    }
}

/// What a gene slot scales into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneKind {
    SensorGain,
    SensorBias,
    TimeConstant,
    NeuronBias,
    RecurrentWeight,
    SensorWeight,
    ActuatorWeight,
    ActuatorGain,
    ActuatorBias,
}

/// Scaled range of one gene slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneSlot {
    pub kind: GeneKind,
    pub low: f64,
    pub high: f64,
}

/// Positional table mapping each gene slot to its scaled range.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSpec {
    slots: Vec<GeneSlot>,
}

const GAIN_RANGE: (f64, f64) = (1.0, 5.0);
const BIAS_RANGE: (f64, f64) = (-3.0, 3.0);
const TIME_CONSTANT_RANGE: (f64, f64) = (1.0, 2.0);
const WEIGHT_RANGE: (f64, f64) = (-8.0, 8.0);

impl ScalingSpec {
    /// The standard table matching the documented gene layout.
    pub fn standard() -> Self {
        let mut slots = Vec::with_capacity(GENES_PER_AGENT);
        let push = |slots: &mut Vec<GeneSlot>, kind, (low, high)| {
            slots.push(GeneSlot { kind, low, high });
        };
        push(&mut slots, GeneKind::SensorGain, GAIN_RANGE);
        push(&mut slots, GeneKind::SensorBias, BIAS_RANGE);
        push(&mut slots, GeneKind::TimeConstant, TIME_CONSTANT_RANGE);
        push(&mut slots, GeneKind::NeuronBias, BIAS_RANGE);
        for _ in 0..NEURONS * NEURONS {
            push(&mut slots, GeneKind::RecurrentWeight, WEIGHT_RANGE);
        }
        for _ in 0..NEURONS * SENSORS {
            push(&mut slots, GeneKind::SensorWeight, WEIGHT_RANGE);
        }
        for _ in 0..ACTUATORS * NEURONS {
            push(&mut slots, GeneKind::ActuatorWeight, WEIGHT_RANGE);
        }
        push(&mut slots, GeneKind::ActuatorGain, GAIN_RANGE);
        push(&mut slots, GeneKind::ActuatorBias, BIAS_RANGE);
        debug_assert_eq!(slots.len(), GENES_PER_AGENT);
        debug_assert!(slots.iter().all(|s| s.low < s.high));
        ScalingSpec { slots }
    }

    pub fn slots(&self) -> &[GeneSlot] {
        &self.slots
    }
}

impl Default for ScalingSpec {
    fn default() -> Self {
        Self::standard()
    }
}

/// Decoded, scaled controller parameters for one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    pub sensor: SensorLayerParams,
    pub ctrnn: CtrnnParams,
    pub actuator: ActuatorParams,
}

/// Linear map from a normalized gene in `[-1, 1]` onto `[low, high]`.
pub fn scale_gene(gene: f64, low: f64, high: f64) -> f64 {
    low + (gene + 1.0) / 2.0 * (high - low)
}

fn decode_block(block: &[f64], spec: &ScalingSpec) -> AgentParams {
    let scaled: Vec<f64> = block
        .iter()
        .zip(spec.slots())
        .map(|(&gene, slot)| scale_gene(gene, slot.low, slot.high))
        .collect();
    let mut cursor = 0;
    let mut take = |n: usize| {
        let slice = &scaled[cursor..cursor + n];
        cursor += n;
        slice.to_vec()
    };
    let sensor_gain = take(1)[0];
    let sensor_bias = take(1)[0];
    let time_constant = take(1)[0];
    let neuron_bias = take(1)[0];
    let recurrent = take(NEURONS * NEURONS);
    let sensor_w = take(NEURONS * SENSORS);
    let actuator_w = take(ACTUATORS * NEURONS);
    let actuator_gain = take(1)[0];
    let actuator_bias = take(1)[0];
    debug_assert_eq!(cursor, GENES_PER_AGENT);

    let mut weights = [[0.0; NEURONS]; NEURONS];
    for i in 0..NEURONS {
        weights[i].copy_from_slice(&recurrent[i * NEURONS..(i + 1) * NEURONS]);
    }
    let mut sensor_weights = [[0.0; SENSORS]; NEURONS];
    for i in 0..NEURONS {
        sensor_weights[i].copy_from_slice(&sensor_w[i * SENSORS..(i + 1) * SENSORS]);
    }
    let mut actuator_weights = [[0.0; NEURONS]; ACTUATORS];
    for a in 0..ACTUATORS {
        actuator_weights[a].copy_from_slice(&actuator_w[a * NEURONS..(a + 1) * NEURONS]);
    }

    AgentParams {
        sensor: SensorLayerParams { gain: sensor_gain, bias: sensor_bias },
        ctrnn: CtrnnParams {
            time_constant,
            bias: neuron_bias,
            weights,
            sensor_weights,
        },
        actuator: ActuatorParams {
            gain: actuator_gain,
            bias: actuator_bias,
            weights: actuator_weights,
        },
    }
}

/// Decode every 30-gene block of a genotype into agent parameters.
pub fn decode(genotype: &Genotype, spec: &ScalingSpec) -> Result<Vec<AgentParams>, GenomeError> {
    if genotype.is_empty() || !genotype.len().is_multiple_of(GENES_PER_AGENT) {
        return Err(GenomeError::BadLength(genotype.len()));
    }
    Ok((0..genotype.agent_count())
        .map(|agent| decode_block(genotype.agent_block(agent), spec))
        .collect())
}

/// Add one noise draw to every gene, clipping back into `[-1, 1]`.
pub(crate) fn mutate_with(genotype: &Genotype, mut noise: impl FnMut() -> f64) -> Genotype {
    let genes = genotype
        .genes
        .iter()
        .map(|&g| (g + noise()).clamp(-1.0, 1.0))
        .collect();
    Genotype { genes }
}

/// Gaussian mutation: each gene gets an independent zero-mean draw with
/// variance [`MUTATION_VARIANCE`], then is clipped into `[-1, 1]`.
pub fn mutate<R: Rng + ?Sized>(genotype: &Genotype, rng: &mut R) -> Genotype {
    let normal = Normal::new(0.0, MUTATION_VARIANCE.sqrt()).expect("valid std dev");
    mutate_with(genotype, || normal.sample(rng))
}

pub(crate) fn crossover_with(
    a: &Genotype,
    b: &Genotype,
    mut swap: impl FnMut() -> bool,
) -> Result<(Genotype, Genotype), GenomeError> {
    if a.len() != b.len() {
        return Err(GenomeError::LengthMismatch(a.len(), b.len()));
    }
    let mut left = a.clone();
    let mut right = b.clone();
    for (x, y) in left.genes.iter_mut().zip(right.genes.iter_mut()) {
        if swap() {
            std::mem::swap(x, y);
        }
    }
    Ok((left, right))
}

/// Uniform parameter-swap crossover with per-gene probability
/// [`CROSSOVER_SWAP_PROBABILITY`].
pub fn crossover<R: Rng + ?Sized>(
    a: &Genotype,
    b: &Genotype,
    rng: &mut R,
) -> Result<(Genotype, Genotype), GenomeError> {
    crossover_with(a, b, || rng.random::<f64>() < CROSSOVER_SWAP_PROBABILITY)
}

/// Elites carried verbatim: `ceil(4% of population)`, at least one.
pub fn elite_count(population: usize) -> usize {
    ((ELITE_FRACTION * population as f64).ceil() as usize).max(1)
}

/// Indices sorted by descending fitness, ties broken by index for
/// determinism. NaN sorts last.
fn rank_by_fitness(fitnesses: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.sort_by(|&i, &j| {
        fitnesses[j]
            .total_cmp(&fitnesses[i])
            .then_with(|| i.cmp(&j))
    });
    order
}

/// Produce the next generation: elites copied verbatim, remainder built by
/// mutating two uniformly drawn elite parents and then crossing them over.
pub fn next_generation<R: Rng + ?Sized>(
    population: &[Genotype],
    fitnesses: &[f64],
    rng: &mut R,
) -> Result<Vec<Genotype>, GenomeError> {
    if population.is_empty() {
        return Err(GenomeError::EmptyPopulation);
    }
    if population.len() != fitnesses.len() {
        return Err(GenomeError::FitnessMismatch {
            got: fitnesses.len(),
            expected: population.len(),
        });
    }
    let order = rank_by_fitness(fitnesses);
    let elite = elite_count(population.len());
    let elites: Vec<&Genotype> = order[..elite].iter().map(|&i| &population[i]).collect();

    let mut next: Vec<Genotype> = elites.iter().map(|g| (*g).clone()).collect();
    while next.len() < population.len() {
        let first = elites[rng.random_range(0..elite)];
        let second = elites[rng.random_range(0..elite)];
        let mutated_first = mutate(first, rng);
        let mutated_second = mutate(second, rng);
        let (child_a, child_b) = crossover(&mutated_first, &mutated_second, rng)?;
        next.push(child_a);
        if next.len() < population.len() {
            next.push(child_b);
        }
    }
    Ok(next)
}
