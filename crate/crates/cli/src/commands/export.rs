//! `dyad export`: per-step CSV of one recorded trial. Floats print with 17
//! significant digits so a re-import reproduces the stored values exactly.

use crate::usage_error;
use crate::workspace::{resolve_workspace, write_csv, RunDir};
use anyhow::Result;
use clap::Args;
use dyad_core::archive::{format_float, TraceArchive};
use std::path::PathBuf;

#[derive(Args)]
pub struct ExportArgs {
    #[arg(long)]
    run: String,
    /// Trial index within the recorded set.
    #[arg(long)]
    trial: usize,
    /// Columns to export.
    #[arg(long, value_parser = ["trajectories", "neural", "all"])]
    what: String,
    /// Output file (default: `<run-dir>/export-trial<N>-<what>.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workspace: Option<PathBuf>,
}

pub fn run(args: ExportArgs) -> Result<()> {
    let workspace = resolve_workspace(args.workspace.clone());
    let run_dir = RunDir::open(&workspace, &args.run).map_err(|e| usage_error(format!("{e:#}")))?;
    let manifest = run_dir.load_manifest().map_err(|e| usage_error(format!("{e:#}")))?;
    let archive =
        TraceArchive::load(&run_dir.traces_path()).map_err(|e| usage_error(e.to_string()))?;
    let trace = archive.traces.get(args.trial).ok_or_else(|| {
        usage_error(format!(
            "run `{}` has {} trial(s), no trial {}",
            args.run,
            archive.traces.len(),
            args.trial
        ))
    })?;

    for (agent, track) in trace.agents.iter().enumerate() {
        let neural_len = if track.is_ghost { trace.spec.duration_steps } else { track.neuron_outputs.len() };
        if track.positions.len() != trace.spec.duration_steps
            || track.headings.len() != trace.spec.duration_steps
            || track.emissions.len() != trace.spec.duration_steps
            || neural_len != trace.spec.duration_steps
        {
            return Err(usage_error(format!(
                "trace of run `{}` trial {} agent {agent} is inconsistent with its declared {} steps",
                args.run, args.trial, trace.spec.duration_steps
            )));
        }
    }

    let (header, tag) = match args.what.as_str() {
        "trajectories" => ("step,time,agent,x,y,heading", "export-trajectories-v1"),
        "neural" => ("step,time,agent,n1,n2,n3,emission", "export-neural-v1"),
        _ => ("step,time,agent,x,y,heading,n1,n2,n3,emission", "export-all-v1"),
    };

    let dt = trace.spec.dt;
    let mut rows = Vec::new();
    for step in 0..trace.spec.duration_steps {
        let time = format_float((step + 1) as f64 * dt);
        for (agent, track) in trace.agents.iter().enumerate() {
            let neural_cols = || -> String {
                if track.is_ghost {
                    ",,,".to_string() + &format_float(track.emissions[step])
                } else {
                    let n = track.neuron_outputs[step];
                    format!(
                        "{},{},{},{}",
                        format_float(n[0]),
                        format_float(n[1]),
                        format_float(n[2]),
                        format_float(track.emissions[step])
                    )
                }
            };
            let row = match args.what.as_str() {
                "trajectories" => format!(
                    "{step},{time},{agent},{},{},{}",
                    format_float(track.positions[step].x),
                    format_float(track.positions[step].y),
                    format_float(track.headings[step]),
                ),
                "neural" => {
                    if track.is_ghost {
                        continue;
                    }
                    format!("{step},{time},{agent},{}", neural_cols())
                }
                _ => format!(
                    "{step},{time},{agent},{},{},{},{}",
                    format_float(track.positions[step].x),
                    format_float(track.positions[step].y),
                    format_float(track.headings[step]),
                    neural_cols(),
                ),
            };
            rows.push(row);
        }
    }

    let out = args.out.unwrap_or_else(|| {
        run_dir
            .path
            .join(format!("export-trial{}-{}.csv", args.trial, args.what))
    });
    write_csv(&out, tag, &manifest.config_hash, header, &rows)?;
    println!("exported {} rows -> {}", rows.len(), out.display());
    Ok(())
}
