//! `dyad analyze`: compute per-trial metrics (neural entropy, heading
//! sample entropy, distance entropy, DTW) over completed runs and write a
//! metrics table plus a per-condition summary.

use crate::usage_error;
use crate::workspace::{glob_match, list_runs, optional_float, resolve_workspace, write_csv, RunDir, RunStatus};
use anyhow::{Context, Result};
use clap::Args;
use dyad_core::analysis::{metrics_for_run, summarize, AnalysisConfig, MetricRow, MetricStats};
use dyad_core::archive::{format_float, TraceArchive};
use std::path::PathBuf;

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Run-id glob patterns (`*` wildcards); default: every completed run.
    patterns: Vec<String>,
    #[arg(long)]
    workspace: Option<PathBuf>,
    /// Output directory (default: `<workspace>/analysis`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn stats_columns(stats: &Option<MetricStats>) -> String {
    match stats {
        Some(s) => format!(
            "{},{},{},{}",
            s.n,
            format_float(s.mean),
            format_float(s.median),
            format_float(s.sd)
        ),
        None => ",,,".to_string(),
    }
}

pub fn run(args: AnalyzeArgs) -> Result<()> {
    let workspace = resolve_workspace(args.workspace.clone());
    let all_runs = list_runs(&workspace)?;
    let selected: Vec<String> = all_runs
        .into_iter()
        .filter(|run_id| {
            args.patterns.is_empty() || args.patterns.iter().any(|p| glob_match(p, run_id))
        })
        .collect();
    if selected.is_empty() {
        return Err(usage_error(format!(
            "no runs match under {} (patterns: {:?})",
            workspace.display(),
            args.patterns
        )));
    }

    let analysis_cfg = AnalysisConfig::default();
    let mut rows: Vec<MetricRow> = Vec::new();
    let mut hashed_runs: Vec<String> = Vec::new();
    let mut analyzed = 0usize;
    for run_id in &selected {
        let run_dir = RunDir::open(&workspace, run_id)?;
        let manifest = run_dir.load_manifest()?;
        if manifest.status != RunStatus::Complete || !run_dir.traces_path().is_file() {
            continue;
        }
        let archive = TraceArchive::load(&run_dir.traces_path())
            .with_context(|| format!("traces of {run_id}"))?;
        let run_rows = metrics_for_run(
            run_id,
            manifest.condition,
            &archive.traces,
            manifest.effective_config.burn_in_steps,
            &analysis_cfg,
        )
        .with_context(|| format!("metrics of {run_id}"))?;
        rows.extend(run_rows);
        hashed_runs.push(format!("{run_id}:{}", manifest.config_hash));
        analyzed += 1;
    }
    if rows.is_empty() {
        return Err(usage_error(
            "matched runs exist but none are complete with traces".to_string(),
        ));
    }

    // One hash binding this analysis to the exact set of runs it covers.
    hashed_runs.sort();
    let combined_hash = crate::config::sha256_hex(hashed_runs.join(";").as_bytes());

    let out_dir = args.out.unwrap_or_else(|| workspace.join("analysis"));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;

    let metric_rows: Vec<String> = rows
        .iter()
        .map(|row| {
            format!(
                "{},{},{},{},{},{},{},{}",
                row.run_id,
                row.condition,
                row.trial,
                row.agent,
                optional_float(row.neural_entropy),
                optional_float(row.heading_sampen),
                optional_float(row.distance_entropy),
                optional_float(row.dtw_distance),
            )
        })
        .collect();
    let metrics_path = out_dir.join("metrics.csv");
    write_csv(
        &metrics_path,
        "metrics-v1",
        &combined_hash,
        "run_id,condition,trial,agent,neural_entropy,heading_sampen,distance_entropy,dtw_distance",
        &metric_rows,
    )?;

    let summary = summarize(&rows);
    let summary_rows: Vec<String> = summary
        .iter()
        .map(|s| {
            format!(
                "{},{},{},{},{},{}",
                s.condition,
                s.rows,
                stats_columns(&s.neural_entropy),
                stats_columns(&s.heading_sampen),
                stats_columns(&s.distance_entropy),
                stats_columns(&s.dtw_distance),
            )
        })
        .collect();
    let summary_path = out_dir.join("summary.csv");
    write_csv(
        &summary_path,
        "summary-v1",
        &combined_hash,
        "condition,rows,\
         neural_entropy_n,neural_entropy_mean,neural_entropy_median,neural_entropy_sd,\
         heading_sampen_n,heading_sampen_mean,heading_sampen_median,heading_sampen_sd,\
         distance_entropy_n,distance_entropy_mean,distance_entropy_median,distance_entropy_sd,\
         dtw_distance_n,dtw_distance_mean,dtw_distance_median,dtw_distance_sd",
        &summary_rows,
    )?;

    println!(
        "analyzed {analyzed} run(s), {} metric rows -> {} and {}",
        rows.len(),
        metrics_path.display(),
        summary_path.display()
    );
    Ok(())
}
