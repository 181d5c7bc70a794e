//! Content-addressed run directories and stage receipts.
//!
//! A run lives in `<out_dir>/<run_id>`, where the id hashes the configuration
//! (minus paths) and the content of every input file. Each stage writes into
//! its own subdirectory and finishes by writing `receipt.json`, which lists
//! the hashes of what it read and wrote.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use adaudit_core::config::AuditConfig;
use adaudit_core::{sha256_hex, stable_seed};
use anyhow::Context;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const RECEIPT_FILE: &str = "receipt.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("stage `{stage}` needs `{needs}` to have run first ({reason})")]
    MissingUpstream {
        stage: Stage,
        needs: Stage,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Ingest,
    Rehydrate,
    Score,
    Calibrate,
    Cluster,
    Urls,
    AnnotateExport,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Rehydrate,
        Stage::Score,
        Stage::Calibrate,
        Stage::Cluster,
        Stage::Urls,
        Stage::AnnotateExport,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Rehydrate => "rehydrate",
            Stage::Score => "score",
            Stage::Calibrate => "calibrate",
            Stage::Cluster => "cluster",
            Stage::Urls => "urls",
            Stage::AnnotateExport => "annotate-export",
            Stage::Report => "report",
        }
    }

    pub fn upstream(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::Rehydrate | Stage::Score | Stage::Urls => &[Stage::Ingest],
            Stage::Calibrate => &[Stage::Rehydrate, Stage::Score],
            Stage::Cluster => &[Stage::Calibrate],
            Stage::AnnotateExport => &[Stage::Calibrate, Stage::Cluster, Stage::Urls],
            Stage::Report => &[Stage::Rehydrate, Stage::Score, Stage::Calibrate, Stage::Cluster, Stage::Urls],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReceipt {
    pub stage: Stage,
    pub run_id: String,
    pub config_hash: String,
    /// Hashes of upstream outputs and external files the stage read.
    pub inputs: BTreeMap<String, String>,
    /// Hashes of every file written, relative to the stage directory.
    pub outputs: BTreeMap<String, String>,
    pub rows: BTreeMap<String, usize>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
}

fn hash_file(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

/// Hashes of every file under `dir` except receipts, keyed by relative path
/// with `/` separators.
pub fn hash_tree(dir: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> anyhow::Result<()> {
        let mut entries: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(root, &path, out)?;
            } else if path.file_name().is_some_and(|n| n != RECEIPT_FILE) {
                let rel = path.strip_prefix(root)?;
                let key = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
                out.insert(key, hash_file(&path)?);
            }
        }
        Ok(())
    }
    let mut out = BTreeMap::new();
    if dir.is_dir() {
        walk(dir, dir, &mut out)?;
    }
    Ok(out)
}

/// External files a run depends on, by config field name.
fn external_inputs(cfg: &AuditConfig) -> Vec<(&'static str, Option<&Path>)> {
    vec![
        ("inputs.initial", Some(cfg.inputs.initial.as_path())),
        ("inputs.rehydrated", Some(cfg.inputs.rehydrated.as_path())),
        ("inputs.calibration_labels", cfg.inputs.calibration_labels.as_deref()),
        ("inputs.false_positives", cfg.inputs.false_positives.as_deref()),
        ("cluster.lexicon", cfg.cluster.lexicon.as_deref()),
    ]
}

/// Hash of the configuration with every path removed, so the same inputs
/// and settings give the same id wherever the files live.
pub fn config_hash(cfg: &AuditConfig) -> String {
    let mut value = serde_json::to_value(cfg).expect("config serializes");
    if let Some(obj) = value.as_object_mut() {
        obj.remove("inputs");
        if let Some(run) = obj.get_mut("run").and_then(|r| r.as_object_mut()) {
            run.remove("out_dir");
        }
        if let Some(services) = obj.get_mut("services").and_then(|s| s.as_object_mut()) {
            services.remove("cassette_dir");
            services.remove("record");
        }
        if let Some(cluster) = obj.get_mut("cluster").and_then(|c| c.as_object_mut()) {
            cluster.remove("lexicon");
        }
    }
    sha256_hex(value.to_string().as_bytes())
}

pub struct RunDir {
    pub root: PathBuf,
    pub run_id: String,
    pub config_hash: String,
    pub input_hashes: BTreeMap<String, String>,
    pub seed: u64,
}

impl RunDir {
    /// Computes the run id and creates the directory.
    pub fn open(cfg: &AuditConfig) -> anyhow::Result<Self> {
        let mut input_hashes = BTreeMap::new();
        for (name, path) in external_inputs(cfg) {
            if let Some(path) = path.filter(|p| !p.as_os_str().is_empty() && p.exists()) {
                input_hashes.insert(name.to_string(), hash_file(path)?);
            }
        }
        let config_hash = config_hash(cfg);
        let mut id_source = config_hash.clone();
        for (name, hash) in &input_hashes {
            id_source.push_str(&format!("\n{name}={hash}"));
        }
        let run_id = sha256_hex(id_source.as_bytes())[..16].to_string();
        let root = cfg.run.out_dir.join(&run_id);
        fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        let manifest = serde_json::json!({
            "run_id": run_id,
            "config_hash": config_hash,
            "inputs": input_hashes,
            "config": cfg,
        });
        fs::write(root.join("run.json"), serde_json::to_vec_pretty(&manifest)?)?;
        Ok(Self {
            root,
            run_id,
            config_hash,
            input_hashes,
            seed: cfg.run.seed,
        })
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.root.join(stage.name())
    }

    pub fn stage_seed(&self, stage: Stage) -> u64 {
        stable_seed(self.seed, stage.name())
    }

    pub fn receipt(&self, stage: Stage) -> anyhow::Result<Option<StageReceipt>> {
        let path = self.stage_dir(stage).join(RECEIPT_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let receipt = serde_json::from_slice(&fs::read(&path)?).with_context(|| format!("parsing {}", path.display()))?;
        Ok(Some(receipt))
    }

    /// Checks that `stage` completed and its outputs are unchanged on disk.
    pub fn verify(&self, stage: Stage, needed_by: Stage) -> anyhow::Result<StageReceipt> {
        let missing = |reason: String| CliError::MissingUpstream {
            stage: needed_by,
            needs: stage,
            reason,
        };
        let receipt = self.receipt(stage)?.ok_or_else(|| missing("no receipt".into()))?;
        if receipt.config_hash != self.config_hash {
            return Err(missing("receipt is from a different configuration".into()).into());
        }
        if hash_tree(&self.stage_dir(stage))? != receipt.outputs {
            return Err(missing("outputs changed since the receipt was written".into()).into());
        }
        Ok(receipt)
    }

    /// Inputs recorded in a stage's receipt: upstream output hashes plus
    /// the external files.
    pub fn stage_inputs(&self, stage: Stage) -> anyhow::Result<BTreeMap<String, String>> {
        let mut inputs = self.input_hashes.clone();
        for &up in stage.upstream() {
            for (file, hash) in self.verify(up, stage)?.outputs {
                inputs.insert(format!("{up}/{file}"), hash);
            }
        }
        Ok(inputs)
    }

    /// True when `stage` has a receipt whose recorded inputs match the
    /// current ones and whose outputs are intact.
    pub fn is_current(&self, stage: Stage) -> anyhow::Result<bool> {
        let Some(receipt) = self.receipt(stage)? else {
            return Ok(false);
        };
        let Ok(inputs) = self.stage_inputs(stage) else {
            return Ok(false);
        };
        Ok(receipt.config_hash == self.config_hash
            && receipt.inputs == inputs
            && hash_tree(&self.stage_dir(stage))? == receipt.outputs)
    }

    /// Empties the stage directory, ready for a fresh run.
    pub fn reset(&self, stage: Stage) -> anyhow::Result<PathBuf> {
        let dir = self.stage_dir(stage);
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    pub fn write_receipt(
        &self,
        stage: Stage,
        inputs: BTreeMap<String, String>,
        rows: BTreeMap<String, usize>,
        started_at: DateTime<Utc>,
    ) -> anyhow::Result<StageReceipt> {
        let receipt = StageReceipt {
            stage,
            run_id: self.run_id.clone(),
            config_hash: self.config_hash.clone(),
            inputs,
            outputs: hash_tree(&self.stage_dir(stage))?,
            rows,
            started_at,
            finished_at: Utc::now(),
        };
        fs::write(
            self.stage_dir(stage).join(RECEIPT_FILE),
            serde_json::to_vec_pretty(&receipt)?,
        )?;
        Ok(receipt)
    }
}
