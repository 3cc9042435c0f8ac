pub mod analyze;
pub mod evolve;
pub mod export;
pub mod extract_playback;
pub mod ghost_test;

use crate::usage_error;
use anyhow::Result;
use dyad_core::experiments::ConditionKind;

pub fn parse_condition(value: &str) -> Result<ConditionKind, String> {
    match value {
        "interactive" => Ok(ConditionKind::Interactive),
        "ghost-test" => Ok(ConditionKind::GhostTest),
        "ghost-evolution" => Ok(ConditionKind::GhostEvolution),
        "isolated" => Ok(ConditionKind::Isolated),
        other => Err(format!(
            "unknown condition `{other}` (expected interactive, ghost-test, ghost-evolution or isolated)"
        )),
    }
}

/// Load a playback archive and hash its raw bytes for mixing detection.
pub fn load_playback_archive(
    path: &std::path::Path,
) -> Result<(dyad_core::experiments::Playback, crate::config::PlaybackSource)> {
    let bytes = std::fs::read(path)
        .map_err(|e| usage_error(format!("cannot read playback {}: {e}", path.display())))?;
    let archive = dyad_core::archive::PlaybackArchive::load(path)
        .map_err(|e| usage_error(format!("{e}")))?;
    let source = crate::config::PlaybackSource {
        provenance: archive.playback.provenance.clone(),
        content_hash: crate::config::sha256_hex(&bytes),
    };
    Ok((archive.playback, source))
}
