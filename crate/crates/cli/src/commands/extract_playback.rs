//! `dyad extract-playback`: package one recorded agent's behavior from a
//! completed run as a standalone playback archive, the input ghost-evolution
//! replays against.

use crate::usage_error;
use crate::workspace::{resolve_workspace, RunDir, RunStatus};
use anyhow::{Context, Result};
use clap::Args;
use dyad_core::archive::{PlaybackArchive, TraceArchive};
use dyad_core::experiments::{ConditionKind, Playback, PlaybackProvenance};
use std::path::PathBuf;

#[derive(Args)]
pub struct ExtractPlaybackArgs {
    #[arg(long)]
    run: String,
    /// Recorded agent to extract (default: the partner for interactive
    /// runs, the single agent otherwise).
    #[arg(long)]
    agent: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    workspace: Option<PathBuf>,
}

pub fn run(args: ExtractPlaybackArgs) -> Result<()> {
    let workspace = resolve_workspace(args.workspace.clone());
    let run_dir = RunDir::open(&workspace, &args.run).map_err(|e| usage_error(format!("{e:#}")))?;
    let manifest = run_dir.load_manifest().map_err(|e| usage_error(format!("{e:#}")))?;
    if manifest.status != RunStatus::Complete {
        return Err(usage_error(format!("run `{}` is not complete", args.run)));
    }
    let archive =
        TraceArchive::load(&run_dir.traces_path()).map_err(|e| usage_error(e.to_string()))?;

    let agent = args.agent.unwrap_or(match manifest.condition {
        ConditionKind::Interactive => 1,
        _ => 0,
    });
    let playback = Playback::from_traces(
        &archive.traces,
        agent,
        PlaybackProvenance {
            run_id: args.run.clone(),
            generation: archive.generation,
            agent_index: agent,
        },
    )
    .map_err(|e| usage_error(e.to_string()))?;

    PlaybackArchive::new(manifest.config_hash.clone(), playback)
        .save(&args.out)
        .context("write playback archive")?;
    println!(
        "extracted agent {agent} of run {} -> {}",
        args.run,
        args.out.display()
    );
    Ok(())
}
