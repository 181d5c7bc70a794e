//! One module per pipeline stage. Every stage reads its upstream outputs
//! from the run directory and writes only into its own subdirectory.

mod annotate;
mod calibrate;
mod cluster;
mod ingest;
mod rehydrate;
mod report;
mod score;
mod urls;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use adaudit_core::config::AuditConfig;
use adaudit_core::corpus::{CorpusStore, TweetRecord, INITIAL_LABEL, REHYDRATED_LABEL};
use adaudit_core::explicit::ExplicitScore;
use adaudit_core::moderation::RehydrationStatus;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::clients::Clients;
use crate::output::read_csv;
use crate::rundir::{RunDir, Stage, StageReceipt};

pub use annotate::{seed_live_store, HiddenRow, HIDDEN_DIR, LIVE_STORE_DIR, STORE_DIR};

pub type Rows = BTreeMap<String, usize>;

pub struct Ctx<'a> {
    pub cfg: &'a AuditConfig,
    pub run: &'a RunDir,
    pub clients: &'a Clients,
    /// The stage's own output directory.
    pub dir: PathBuf,
    pub seed: u64,
}

impl Ctx<'_> {
    pub fn upstream(&self, stage: Stage) -> PathBuf {
        self.run.stage_dir(stage)
    }
}

/// Runs one stage after verifying its upstream receipts.
pub fn run_stage(stage: Stage, cfg: &AuditConfig, run: &RunDir, clients: &Clients) -> anyhow::Result<StageReceipt> {
    let inputs = run.stage_inputs(stage)?;
    let started = Utc::now();
    let dir = run.reset(stage)?;
    let ctx = Ctx {
        cfg,
        run,
        clients,
        dir,
        seed: run.stage_seed(stage),
    };
    log::info!("stage {stage}: running");
    let rows = match stage {
        Stage::Ingest => ingest::run(&ctx)?,
        Stage::Rehydrate => rehydrate::run(&ctx)?,
        Stage::Score => score::run(&ctx)?,
        Stage::Calibrate => calibrate::run(&ctx)?,
        Stage::Cluster => cluster::run(&ctx)?,
        Stage::Urls => urls::run(&ctx)?,
        Stage::AnnotateExport => annotate::run(&ctx)?,
        Stage::Report => report::run(&ctx)?,
    };
    let receipt = run.write_receipt(stage, inputs, rows, started)?;
    log::info!("stage {stage}: done, {:?}", receipt.rows);
    Ok(receipt)
}

/// Initial and rehydrated ads, each ordered by `(captured_at, tweet_id)`.
pub fn load_ads(run: &RunDir) -> anyhow::Result<(Vec<TweetRecord>, Vec<TweetRecord>)> {
    let store = CorpusStore::open(run.stage_dir(Stage::Ingest).join(ingest::CORPUS_DIR))?;
    Ok((store.records(INITIAL_LABEL)?, store.records(REHYDRATED_LABEL)?))
}

/// Moderation status of one initial ad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub tweet_id: String,
    pub author_id: String,
    pub lang: String,
    pub created_at: DateTime<Utc>,
    pub status: RehydrationStatus,
}

pub fn load_pairs(run: &RunDir) -> anyhow::Result<Vec<PairRow>> {
    read_csv(&run.stage_dir(Stage::Rehydrate).join(rehydrate::PAIRS_FILE))
}

pub fn load_scores(run: &RunDir) -> anyhow::Result<Vec<ExplicitScore>> {
    read_csv(&run.stage_dir(Stage::Score).join(score::SCORES_FILE))
}

/// An ad at or above the explicitness threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdultRow {
    pub tweet_id: String,
    pub score: f64,
    pub status: RehydrationStatus,
    pub false_positive: bool,
    pub violating: bool,
}

pub fn load_adult(run: &RunDir) -> anyhow::Result<Vec<AdultRow>> {
    read_csv(&run.stage_dir(Stage::Calibrate).join(calibrate::ADULT_FILE))
}

/// Cluster label of each violating ad in the selected run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRow {
    pub tweet_id: String,
    pub cluster: i64,
}

pub fn required_input<'a>(path: &'a Path, field: &str) -> anyhow::Result<&'a Path> {
    if path.as_os_str().is_empty() {
        return Err(crate::rundir::CliError::ConfigInvalid(format!("{field} is not set")).into());
    }
    Ok(path)
}
