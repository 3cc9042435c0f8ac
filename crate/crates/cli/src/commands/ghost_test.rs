//! `dyad ghost-test`: replay the champion pair of a completed interactive
//! run with one agent as a non-sensing ghost, from placement angles that
//! differ from the recorded trials. Results land in a derived run directory
//! that `analyze` picks up like any other.

use crate::config::sha256_hex;
use crate::usage_error;
use crate::workspace::{
    epoch_seconds, resolve_workspace, write_csv, RunDir, RunManifest, RunOutputs, RunStatus,
    MANIFEST_FORMAT_VERSION,
};
use anyhow::{Context, Result};
use clap::Args;
use dyad_core::archive::{format_float, GenotypeFile, TraceArchive, FORMAT_VERSION};
use dyad_core::experiments::{ghost_test_from_parts, ConditionKind, GhostTestTrial};
use dyad_core::genome::Genotype;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Args)]
pub struct GhostTestArgs {
    /// Source interactive run id.
    #[arg(long)]
    run: String,
    /// Seed for the placement-angle draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Which recorded agent becomes the ghost (0 or 1).
    #[arg(long, default_value_t = 1)]
    ghost_agent: usize,
    #[arg(long)]
    workspace: Option<PathBuf>,
}

#[derive(Serialize)]
struct GhostReportFile {
    format_version: u32,
    config_hash: String,
    source_run_id: String,
    seed: u64,
    live_agent: usize,
    ghost_agent: usize,
    pooled_entropy: f64,
    interactive_entropy: f64,
    trials: Vec<GhostTestTrial>,
}

pub fn run(args: GhostTestArgs) -> Result<()> {
    let workspace = resolve_workspace(args.workspace.clone());
    let source = RunDir::open(&workspace, &args.run).map_err(|e| usage_error(format!("{e:#}")))?;
    let manifest = source.load_manifest().map_err(|e| usage_error(format!("{e:#}")))?;
    if manifest.status != RunStatus::Complete {
        return Err(usage_error(format!("run `{}` is not complete", args.run)));
    }
    if manifest.condition != ConditionKind::Interactive {
        return Err(usage_error(format!(
            "run `{}` has condition `{}`; ghost-test needs an interactive run",
            args.run, manifest.condition
        )));
    }

    let genotype_file = GenotypeFile::load(&source.best_genotype_path())
        .map_err(|e| usage_error(e.to_string()))?;
    let genotype: Genotype = genotype_file.genotype().map_err(|e| usage_error(e.to_string()))?;
    let archive =
        TraceArchive::load(&source.traces_path()).map_err(|e| usage_error(e.to_string()))?;
    if archive.config_hash != manifest.config_hash {
        return Err(usage_error(format!(
            "traces in `{}` carry config {}, manifest says {}",
            args.run, archive.config_hash, manifest.config_hash
        )));
    }

    let report = ghost_test_from_parts(
        &genotype,
        &archive.traces,
        &manifest.effective_config,
        archive.generation,
        args.ghost_agent,
        args.seed,
    )
    .context("ghost-test failed")?;

    let derived_hash = sha256_hex(
        format!(
            "ghost-test:{}:{}:{}",
            manifest.config_hash, args.seed, args.ghost_agent
        )
        .as_bytes(),
    );
    let ghost_run_id = format!("{}-ghost-s{}", args.run, args.seed);
    let ghost_dir = RunDir::create(&workspace, &ghost_run_id)?;

    let mut ghost_manifest = RunManifest {
        format_version: MANIFEST_FORMAT_VERSION,
        run_id: ghost_run_id.clone(),
        condition: ConditionKind::GhostTest,
        seed: args.seed,
        config_hash: derived_hash.clone(),
        effective_config: manifest.effective_config,
        parallelism: 1,
        checkpoint_interval: manifest.checkpoint_interval,
        playback: None,
        playback_path: None,
        outputs: RunOutputs::default(),
        status: RunStatus::Running,
        started_at_epoch_s: epoch_seconds(),
        finished_at_epoch_s: None,
        generations_completed: 0,
    };
    ghost_manifest.effective_config.condition = ConditionKind::GhostTest;
    ghost_dir.write_manifest(&ghost_manifest)?;

    let report_file = GhostReportFile {
        format_version: FORMAT_VERSION,
        config_hash: derived_hash.clone(),
        source_run_id: args.run.clone(),
        seed: args.seed,
        live_agent: report.live_agent,
        ghost_agent: report.ghost_agent,
        pooled_entropy: report.pooled_entropy,
        interactive_entropy: report.interactive_entropy,
        trials: report.trials.clone(),
    };
    std::fs::write(
        ghost_dir.path.join("ghost_report.json"),
        serde_json::to_string_pretty(&report_file)? + "\n",
    )
    .context("write ghost report")?;

    let rows: Vec<String> = report
        .trials
        .iter()
        .map(|t| {
            format!(
                "{},{},{},{}",
                t.trial,
                format_float(t.recorded_angle),
                format_float(t.test_angle),
                format_float(t.entropy),
            )
        })
        .collect();
    write_csv(
        &ghost_dir.path.join("ghost_test.csv"),
        "ghost-test-v1",
        &derived_hash,
        "trial,recorded_angle,test_angle,live_entropy",
        &rows,
    )?;

    TraceArchive {
        format_version: FORMAT_VERSION,
        config_hash: derived_hash,
        run_id: ghost_run_id.clone(),
        condition: ConditionKind::GhostTest,
        seed: args.seed,
        generation: archive.generation,
        fitness: report.pooled_entropy,
        agent_entropies: vec![report.pooled_entropy],
        traces: report.traces.clone(),
    }
    .save(&ghost_dir.traces_path())
    .context("write ghost traces")?;

    ghost_manifest.status = RunStatus::Complete;
    ghost_manifest.finished_at_epoch_s = Some(epoch_seconds());
    ghost_dir.write_manifest(&ghost_manifest)?;

    println!(
        "ghost-test {}: live entropy {} (interactive {}){}",
        ghost_run_id,
        format_float(report.pooled_entropy),
        format_float(report.interactive_entropy),
        if report.pooled_entropy <= report.interactive_entropy {
            ", complexity reduced"
        } else {
            ""
        }
    );
    Ok(())
}
