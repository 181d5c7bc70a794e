//! Loading the TOML configuration file.

use std::path::{Path, PathBuf};

use adaudit_core::config::AuditConfig;
use anyhow::Context;

use crate::rundir::CliError;

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// Replay service responses from this cassette and never go online.
    pub cassette: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if !p.as_os_str().is_empty() && p.is_relative() {
        *p = base.join(&*p);
    }
}

/// Reads `path`, resolves relative paths against the file's directory,
/// applies overrides and validates.
pub fn load(path: &Path, overrides: &Overrides) -> anyhow::Result<AuditConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg: AuditConfig =
        toml::from_str(&text).map_err(|e| CliError::ConfigInvalid(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    resolve(&base, &mut cfg.run.out_dir);
    resolve(&base, &mut cfg.inputs.initial);
    resolve(&base, &mut cfg.inputs.rehydrated);
    for p in [&mut cfg.inputs.calibration_labels, &mut cfg.inputs.false_positives, &mut cfg.cluster.lexicon]
        .into_iter()
        .flatten()
    {
        resolve(&base, p);
    }
    if let Some(dir) = cfg.services.cassette_dir.as_mut() {
        resolve(&base, dir);
    }
    if let Some(dir) = &overrides.cassette {
        cfg.services.cassette_dir = Some(dir.clone());
        cfg.services.record = false;
    }
    if let Some(out) = &overrides.out_dir {
        cfg.run.out_dir = out.clone();
    }
    cfg.validate().map_err(|e| CliError::ConfigInvalid(e.0))?;
    Ok(cfg)
}
