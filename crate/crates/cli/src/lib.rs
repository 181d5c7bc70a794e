//! Pipeline orchestration behind the `audit` binary.
//!
//! Each stage reads upstream outputs from a content-addressed run directory
//! and writes a receipt when it finishes, so `full-run` can resume and any
//! single stage can be rerun on its own.

pub mod clients;
pub mod fixture;
pub mod output;
pub mod rundir;
pub mod settings;
pub mod stages;

use std::collections::BTreeMap;
use std::path::Path;

use adaudit_core::annotate::{blind_accuracy, SessionStore};
use adaudit_core::config::AuditConfig;
use serde::Serialize;

use crate::clients::Clients;
use crate::output::read_csv;
use crate::rundir::{RunDir, Stage};
use crate::stages::{run_stage, HiddenRow, HIDDEN_DIR};

/// What `full_run` did with one stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    Ran,
    /// The receipt matched current inputs, so the stage was skipped.
    Current,
}

/// Runs every stage in order, skipping those whose receipts are current.
pub fn full_run(cfg: &AuditConfig, run: &RunDir) -> anyhow::Result<Vec<(Stage, StageOutcome)>> {
    let clients = Clients::new(cfg);
    let mut out = Vec::new();
    for stage in Stage::ALL {
        if run.is_current(stage)? {
            log::info!("stage {stage}: current, skipping");
            out.push((stage, StageOutcome::Current));
            continue;
        }
        run_stage(stage, cfg, run, &clients)?;
        out.push((stage, StageOutcome::Ran));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionResults {
    pub session_id: String,
    pub kind: String,
    pub complete: bool,
    pub tasks: usize,
    /// Labels still missing across all annotators.
    pub missing_labels: usize,
    pub fleiss_kappa: Option<f64>,
    pub percent_agreement: Option<f64>,
    /// `(correct, total)` for blind cluster sessions.
    pub blind_accuracy: Option<(usize, usize)>,
}

/// Progress, agreement and blind accuracy for every session in `store_root`.
pub fn annotation_results(store_root: &Path, run: &RunDir) -> anyhow::Result<Vec<SessionResults>> {
    let store = SessionStore::open(store_root)?;
    let hidden_dir = run.stage_dir(Stage::AnnotateExport).join(HIDDEN_DIR);
    let mut out = Vec::new();
    for id in store.session_ids() {
        let status = store.status(&id)?;
        let agreement = if status.complete { store.agreement(&id).ok() } else { None };
        let hidden_path = hidden_dir.join(format!("{id}.csv"));
        let accuracy = if status.complete && hidden_path.exists() {
            let rows: Vec<HiddenRow> = read_csv(&hidden_path)?;
            let hidden: BTreeMap<String, String> = rows.into_iter().map(|r| (r.task_id, r.hidden_label)).collect();
            Some(blind_accuracy(&store, &id, &hidden)?)
        } else {
            None
        };
        out.push(SessionResults {
            kind: status.kind.as_str().to_string(),
            complete: status.complete,
            tasks: status.n_tasks,
            missing_labels: status.annotators.iter().map(|a| a.total - a.done).sum(),
            fleiss_kappa: agreement.as_ref().map(|a| a.fleiss_kappa),
            percent_agreement: agreement.as_ref().map(|a| a.percent_agreement),
            blind_accuracy: accuracy,
            session_id: id,
        });
    }
    Ok(out)
}
