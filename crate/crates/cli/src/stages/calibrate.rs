//! Stratified calibration sample, f1 threshold sweep against annotator
//! consensus, and the adult / violating split at the configured threshold.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;

use adaudit_core::annotate::{agreement_from_labels, ADULT, NOT_ADULT};
use adaudit_core::explicit::{
    apply_fp_removal, calibrate_threshold, classify_adult, language_disparity, stratified_sample,
};
use adaudit_core::moderation::RehydrationStatus;
use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{load_ads, load_pairs, load_scores, AdultRow, Ctx, Rows};
use crate::output::{read_csv, write_csv, write_json};

pub const ADULT_FILE: &str = "adult.csv";
pub const SAMPLE_FILE: &str = "sample.csv";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRow {
    pub tweet_id: String,
    pub score: f64,
}

#[derive(Debug, Deserialize)]
struct LabelRecord {
    tweet_id: String,
    annotator: String,
    label: String,
}

/// Majority vote per item; an even split counts as adult.
fn consensus(labels: &BTreeMap<String, String>) -> bool {
    let adult = labels.values().filter(|l| *l == ADULT).count();
    2 * adult >= labels.len()
}

fn read_ids(path: &std::path::Path) -> anyhow::Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

fn calibrate_against_labels(
    ctx: &Ctx,
    scores: &[adaudit_core::explicit::ExplicitScore],
    sample: &[String],
    rows: &mut Rows,
) -> anyhow::Result<()> {
    let Some(path) = &ctx.cfg.inputs.calibration_labels else {
        log::info!("no calibration labels configured; wrote the sample only");
        return Ok(());
    };
    let mut by_item: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let mut annotators = BTreeSet::new();
    for r in read_csv::<LabelRecord>(path)? {
        if r.label != ADULT && r.label != NOT_ADULT {
            bail!("{}: label {:?} for {} is neither {ADULT} nor {NOT_ADULT}", path.display(), r.label, r.tweet_id);
        }
        annotators.insert(r.annotator.clone());
        by_item.entry(r.tweet_id).or_default().insert(r.annotator, r.label);
    }
    let labeled: Vec<&String> = sample.iter().filter(|id| by_item.contains_key(*id)).collect();
    if labeled.len() < sample.len() {
        log::warn!("{} of {} sampled ads have no labels", sample.len() - labeled.len(), sample.len());
    }
    let consensus_labels: BTreeMap<String, bool> =
        labeled.iter().map(|id| ((*id).clone(), consensus(&by_item[*id]))).collect();
    let report = calibrate_threshold(scores, &consensus_labels)?;
    let chosen = report.chosen().clone();
    if chosen.threshold != ctx.cfg.explicit.threshold {
        log::warn!(
            "sweep picked {} but explicit.threshold is {}; the configured value is used downstream",
            chosen.threshold,
            ctx.cfg.explicit.threshold
        );
    }
    write_csv(&ctx.dir.join("threshold_sweep.csv"), &report.threshold_candidates)?;
    write_json(
        &ctx.dir.join("calibration.json"),
        &json!({
            "labeled_items": consensus_labels.len(),
            "configured_threshold": ctx.cfg.explicit.threshold,
            "report": report,
        }),
    )?;

    // Agreement over the sampled items every annotator labeled.
    let complete: Vec<Vec<String>> = labeled
        .iter()
        .filter(|id| by_item[**id].len() == annotators.len())
        .map(|id| by_item[*id].values().cloned().collect())
        .collect();
    let agreement = match agreement_from_labels(&complete) {
        Ok(a) => json!(a),
        Err(e) => json!({ "undefined": e.to_string() }),
    };
    write_json(&ctx.dir.join("agreement.json"), &agreement)?;
    rows.insert("labeled".into(), consensus_labels.len());
    Ok(())
}

pub fn run(ctx: &Ctx) -> anyhow::Result<Rows> {
    let cfg = &ctx.cfg.explicit;
    let scores = load_scores(ctx.run)?;
    let mut rows = Rows::new();

    let sample = stratified_sample(&scores, cfg.calibration_per_bin, cfg.calibration_bin_width, ctx.seed)?;
    let score_of: HashMap<&str, f64> = scores.iter().map(|s| (s.tweet_id.as_str(), s.score)).collect();
    let sample_rows: Vec<SampleRow> = sample
        .iter()
        .map(|id| SampleRow {
            tweet_id: id.clone(),
            score: score_of[id.as_str()],
        })
        .collect();
    write_csv(&ctx.dir.join(SAMPLE_FILE), &sample_rows)?;
    rows.insert("sample".into(), sample.len());
    calibrate_against_labels(ctx, &scores, &sample, &mut rows)?;

    let split = classify_adult(&scores, cfg.threshold)?;
    let fps = match &ctx.cfg.inputs.false_positives {
        Some(path) => read_ids(path)?,
        None => BTreeSet::new(),
    };
    let violating = apply_fp_removal(&split.adult, &fps)?;
    let status: HashMap<String, RehydrationStatus> =
        load_pairs(ctx.run)?.into_iter().map(|p| (p.tweet_id, p.status)).collect();
    let adult_rows: Vec<AdultRow> = split
        .adult
        .iter()
        .map(|id| AdultRow {
            tweet_id: id.clone(),
            score: score_of[id.as_str()],
            status: status[id],
            false_positive: fps.contains(id),
            violating: violating.contains(id),
        })
        .collect();
    write_csv(&ctx.dir.join(ADULT_FILE), &adult_rows)?;

    let (initial, _) = load_ads(ctx.run)?;
    let (moderated, unmoderated): (Vec<_>, Vec<_>) = initial
        .into_iter()
        .filter(|r| violating.contains(&r.tweet_id))
        .partition(|r| status[&r.tweet_id] == RehydrationStatus::Removed);
    write_csv(&ctx.dir.join("language_disparity.csv"), &language_disparity(&moderated, &unmoderated))?;

    rows.insert("adult".into(), split.adult.len());
    rows.insert("false_positives".into(), fps.len());
    rows.insert("violating".into(), violating.len());
    Ok(rows)
}
