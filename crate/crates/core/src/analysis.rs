//! Post-hoc complexity and interaction metrics: sample entropy of heading
//! series, binned entropy of the inter-agent distance, and DTW synchrony on
//! xy trajectories.

use crate::experiments::{single_trial_entropy, ConditionKind, TrialTrace};
use crate::physics::Vec2;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("series of length {len} too short (need more than {needed})")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("series is empty")]
    EmptySeries,
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("agent index {agent} out of range ({agents} agents)")]
    AgentIndex { agent: usize, agents: usize },
    #[error("agent {agent} carries no recorded neural outputs")]
    NoNeuralOutputs { agent: usize },
}

/// Metric parameters; defaults follow common practice for physiological
/// series (embedding 2, tolerance 0.2 standard deviations).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub sampen_embedding: usize,
    pub sampen_r_factor: f64,
    /// Headings are thinned by this stride before template counting to keep
    /// the O(n^2) match count tractable on long trials.
    pub heading_subsample: usize,
    pub distance_bins: usize,
    pub distance_cap: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            sampen_embedding: 2,
            sampen_r_factor: 0.2,
            heading_subsample: 10,
            distance_bins: 100,
            distance_cap: 100.0,
        }
    }
}

/// Sample entropy: -ln(A/B) with B the m-length and A the (m+1)-length
/// template matches under Chebyshev tolerance `r`, self-matches excluded.
/// Returns +infinity as the degenerate sentinel when no matches extend.
pub fn sample_entropy(series: &[f64], m: usize, r: f64) -> Result<f64, AnalysisError> {
    if m == 0 {
        return Err(AnalysisError::BadParameter("embedding length m must be positive".into()));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(AnalysisError::BadParameter(format!("tolerance r must be finite and >= 0, got {r}")));
    }
    if series.len() <= m + 1 {
        return Err(AnalysisError::SeriesTooShort { len: series.len(), needed: m + 1 });
    }
    let templates = series.len() - m;
    let mut short_matches: u64 = 0;
    let mut long_matches: u64 = 0;
    for i in 0..templates {
        for j in (i + 1)..templates {
            let mut matched = true;
            for k in 0..m {
                if (series[i + k] - series[j + k]).abs() > r {
                    matched = false;
                    break;
                }
            }
            if matched {
                short_matches += 1;
                if (series[i + m] - series[j + m]).abs() <= r {
                    long_matches += 1;
                }
            }
        }
    }
    if short_matches == 0 || long_matches == 0 {
        return Ok(f64::INFINITY);
    }
    if long_matches == short_matches {
        return Ok(0.0);
    }
    Ok(-((long_matches as f64 / short_matches as f64).ln()))
}

fn wrap_to_pi(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    if wrapped > PI {
        wrapped - TAU
    } else {
        wrapped
    }
}

/// Remove 2π jumps from a wrapped angle series; consecutive differences of
/// the result lie in (-π, π].
pub fn unwrap_angles(values: &[f64]) -> Vec<f64> {
    let mut unwrapped = Vec::with_capacity(values.len());
    let mut previous = match values.first() {
        Some(&v) => {
            unwrapped.push(v);
            v
        }
        None => return unwrapped,
    };
    let mut offset = 0.0;
    for &value in &values[1..] {
        let delta = wrap_to_pi(value - previous);
        offset += delta;
        unwrapped.push(unwrapped[0] + offset);
        previous = value;
    }
    unwrapped
}

/// Unwrapped heading series of one agent.
pub fn heading_series(trace: &TrialTrace, agent: usize) -> Result<Vec<f64>, AnalysisError> {
    let track = trace.agents.get(agent).ok_or(AnalysisError::AgentIndex {
        agent,
        agents: trace.agents.len(),
    })?;
    Ok(unwrap_angles(&track.headings))
}

fn population_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Sample entropy of one agent's recorded heading series, thinned by
/// `heading_subsample`, with tolerance `r = sampen_r_factor * SD` of the
/// analyzed series.
///
/// The wrapped headings are used as recorded: the series must stay bounded
/// for the SD-relative tolerance to resolve structure. On the unwrapped
/// cumulative series the net rotation dominates the SD, every template
/// falls within tolerance and the measure collapses toward zero regardless
/// of how regular the motion is.
pub fn heading_sample_entropy(
    trace: &TrialTrace,
    agent: usize,
    cfg: &AnalysisConfig,
) -> Result<f64, AnalysisError> {
    let track = trace.agents.get(agent).ok_or(AnalysisError::AgentIndex {
        agent,
        agents: trace.agents.len(),
    })?;
    let stride = cfg.heading_subsample.max(1);
    let thinned: Vec<f64> = track.headings.iter().copied().step_by(stride).collect();
    if thinned.len() <= cfg.sampen_embedding + 1 {
        return Err(AnalysisError::SeriesTooShort {
            len: thinned.len(),
            needed: cfg.sampen_embedding + 1,
        });
    }
    let r = cfg.sampen_r_factor * population_sd(&thinned);
    sample_entropy(&thinned, cfg.sampen_embedding, r)
}

/// Normalized Shannon entropy of the per-step inter-agent distance, binned
/// into `bins` equal-width bins over `[0, cap]` (larger distances land in
/// the last bin).
pub fn distance_entropy(
    first: &[Vec2],
    second: &[Vec2],
    bins: usize,
    cap: f64,
) -> Result<f64, AnalysisError> {
    if first.len() != second.len() {
        return Err(AnalysisError::LengthMismatch(first.len(), second.len()));
    }
    if first.is_empty() {
        return Err(AnalysisError::EmptySeries);
    }
    if bins < 2 {
        return Err(AnalysisError::BadParameter(format!("need at least 2 bins, got {bins}")));
    }
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(AnalysisError::BadParameter(format!("distance cap must be positive, got {cap}")));
    }
    let mut counts = vec![0u64; bins];
    for (a, b) in first.iter().zip(second) {
        let d = a.distance(*b);
        let bin = ((d / cap * bins as f64) as usize).min(bins - 1);
        counts[bin] += 1;
    }
    let total = first.len() as f64;
    let mut h = 0.0;
    for &count in &counts {
        if count > 0 {
            let p = count as f64 / total;
            h -= p * p.ln();
        }
    }
    Ok(h / (bins as f64).ln())
}

/// Classic dynamic time warping with Euclidean local cost, full window and
/// boundary-matched path; returns the accumulated optimal cost.
pub fn dtw_distance(first: &[Vec2], second: &[Vec2]) -> Result<f64, AnalysisError> {
    if first.is_empty() || second.is_empty() {
        return Err(AnalysisError::EmptySeries);
    }
    let columns = second.len();
    let mut previous = vec![f64::INFINITY; columns + 1];
    let mut current = vec![f64::INFINITY; columns + 1];
    previous[0] = 0.0;
    for a in first {
        current[0] = f64::INFINITY;
        for (j, b) in second.iter().enumerate() {
            let cost = a.distance(*b);
            current[j + 1] = cost + previous[j + 1].min(current[j]).min(previous[j]);
        }
        std::mem::swap(&mut previous, &mut current);
    }
    Ok(previous[columns])
}

/// One metrics row: live-agent complexity plus pair metrics when a partner
/// or ghost is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub run_id: String,
    pub condition: ConditionKind,
    pub trial: usize,
    pub agent: usize,
    pub neural_entropy: Option<f64>,
    pub heading_sampen: Option<f64>,
    pub distance_entropy: Option<f64>,
    pub dtw_distance: Option<f64>,
}

/// Metric rows for one run's trial set. The live agent is agent 0 by
/// convention; pair metrics are emitted only for two-agent trials.
pub fn metrics_for_run(
    run_id: &str,
    condition: ConditionKind,
    traces: &[TrialTrace],
    burn_in: usize,
    cfg: &AnalysisConfig,
) -> Result<Vec<MetricRow>, AnalysisError> {
    let mut rows = Vec::with_capacity(traces.len());
    for (trial, trace) in traces.iter().enumerate() {
        let neural = single_trial_entropy(trace, 0, burn_in).map_err(|_| {
            AnalysisError::NoNeuralOutputs { agent: 0 }
        })?;
        let sampen = heading_sample_entropy(trace, 0, cfg)?;
        let (distance, dtw) = if trace.agents.len() >= 2 {
            let a = &trace.agents[0].positions;
            let b = &trace.agents[1].positions;
            (
                Some(distance_entropy(a, b, cfg.distance_bins, cfg.distance_cap)?),
                Some(dtw_distance(a, b)?),
            )
        } else {
            (None, None)
        };
        rows.push(MetricRow {
            run_id: run_id.to_string(),
            condition,
            trial,
            agent: 0,
            neural_entropy: Some(neural),
            heading_sampen: Some(sampen),
            distance_entropy: distance,
            dtw_distance: dtw,
        });
    }
    Ok(rows)
}

/// Descriptive statistics of one metric within one condition; SD is the
/// population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
}

fn stats_of(values: &[f64]) -> Option<MetricStats> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    Some(MetricStats {
        n,
        mean: sorted.iter().sum::<f64>() / n as f64,
        median,
        sd: population_sd(&sorted),
    })
}

/// Per-condition descriptive table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: ConditionKind,
    pub rows: usize,
    pub neural_entropy: Option<MetricStats>,
    pub heading_sampen: Option<MetricStats>,
    pub distance_entropy: Option<MetricStats>,
    pub dtw_distance: Option<MetricStats>,
}

fn condition_rank(condition: ConditionKind) -> usize {
    match condition {
        ConditionKind::Interactive => 0,
        ConditionKind::GhostTest => 1,
        ConditionKind::GhostEvolution => 2,
        ConditionKind::Isolated => 3,
    }
}

/// Group metric rows by condition and report mean/median/SD/n per metric.
/// No inferential statistics; downstream tooling consumes the table.
pub fn summarize(rows: &[MetricRow]) -> Vec<ConditionSummary> {
    let mut conditions: Vec<ConditionKind> = Vec::new();
    for row in rows {
        if !conditions.contains(&row.condition) {
            conditions.push(row.condition);
        }
    }
    conditions.sort_by_key(|c| condition_rank(*c));
    conditions
        .iter()
        .map(|&condition| {
            let selected: Vec<&MetricRow> =
                rows.iter().filter(|r| r.condition == condition).collect();
            let collect = |f: fn(&MetricRow) -> Option<f64>| -> Vec<f64> {
                selected.iter().filter_map(|r| f(r)).collect()
            };
            ConditionSummary {
                condition,
                rows: selected.len(),
                neural_entropy: stats_of(&collect(|r| r.neural_entropy)),
                heading_sampen: stats_of(&collect(|r| r.heading_sampen)),
                distance_entropy: stats_of(&collect(|r| r.distance_entropy)),
                dtw_distance: stats_of(&collect(|r| r.dtw_distance)),
            }
        })
        .collect()
}
