//! Build annotation sessions from the pipeline outputs.
//!
//! Sessions go into `annotate-export/store`. Hidden model labels for blind
//! cluster sessions are written to `annotate-export/hidden/`, outside the
//! store, so the annotation service never sees them. `audit serve` copies
//! sessions into a separate live store so labeling does not alter this
//! stage's outputs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use adaudit_core::annotate::{AnnotationKind, SessionSpec, SessionStore, TaskItem};
use adaudit_core::corpus::TweetRecord;
use adaudit_core::stable_seed;
use adaudit_core::urlaudit::{canonical_url, extract_embedded_urls, url_score, UrlLookup};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::calibrate::{SampleRow, SAMPLE_FILE};
use super::cluster::{BlindRow, BLIND_ABOVE_FILE, BLIND_BELOW_FILE};
use super::urls::LOOKUPS_FILE;
use super::{load_adult, load_ads, Ctx, Rows};
use crate::output::{read_csv, read_jsonl, write_csv, write_json};
use crate::rundir::Stage;

pub const STORE_DIR: &str = "store";
pub const HIDDEN_DIR: &str = "hidden";
/// Directory under the run root holding the store that `audit serve` writes.
pub const LIVE_STORE_DIR: &str = "annotations";

/// Model label of one blind task, keyed the way `blind_accuracy` expects.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HiddenRow {
    pub task_id: String,
    pub tweet_id: String,
    pub hidden_label: String,
}

pub fn cluster_choice(label: i64) -> String {
    format!("cluster-{label}")
}

fn items(ids: impl IntoIterator<Item = String>, text: &HashMap<&str, &TweetRecord>) -> Vec<TaskItem> {
    ids.into_iter()
        .map(|id| TaskItem {
            presented_text: text.get(id.as_str()).map(|r| r.text.clone()).unwrap_or_default(),
            tweet_id: id,
        })
        .collect()
}

struct Builder<'a> {
    ctx: &'a Ctx<'a>,
    store: SessionStore,
    rows: Rows,
}

impl Builder<'_> {
    fn add(&mut self, id: &str, kind: AnnotationKind, items: Vec<TaskItem>, choices: Vec<String>) -> anyhow::Result<bool> {
        if items.is_empty() {
            log::info!("session {id}: nothing to annotate, skipped");
            return Ok(false);
        }
        let n = items.len();
        self.store.create_session(SessionSpec {
            session_id: id.to_string(),
            kind,
            items,
            choice_set: choices,
            annotators: self.ctx.cfg.annotate.annotators.clone(),
            seed: stable_seed(self.ctx.seed, id),
        })?;
        self.rows.insert(id.to_string(), n);
        Ok(true)
    }

    fn blind(&mut self, id: &str, file: &str, text: &HashMap<&str, &TweetRecord>) -> anyhow::Result<()> {
        let path = self.ctx.upstream(Stage::Cluster).join(file);
        if !path.exists() {
            return Ok(());
        }
        let blind: Vec<BlindRow> = read_csv(&path)?;
        let choices: Vec<String> = blind
            .iter()
            .map(|b| b.hidden_cluster_label)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(cluster_choice)
            .collect();
        let ids = blind.iter().map(|b| b.tweet_id.clone());
        if self.add(id, AnnotationKind::ClusterBlind, items(ids, text), choices)? {
            let tasks = self.store.tasks(id)?;
            let hidden: Vec<HiddenRow> = tasks
                .iter()
                .zip(&blind)
                .map(|(t, b)| HiddenRow {
                    task_id: t.task_id.clone(),
                    tweet_id: b.tweet_id.clone(),
                    hidden_label: cluster_choice(b.hidden_cluster_label),
                })
                .collect();
            write_csv(&self.ctx.dir.join(HIDDEN_DIR).join(format!("{id}.csv")), &hidden)?;
        }
        Ok(())
    }
}

fn landing_items(ctx: &Ctx, initial: &[TweetRecord]) -> anyhow::Result<Vec<TaskItem>> {
    let lookups: Vec<UrlLookup> = read_jsonl(&ctx.upstream(Stage::Urls).join(LOOKUPS_FILE))?;
    let threshold = ctx.cfg.urls.threshold;
    let unsafe_landing: BTreeMap<&str, &str> = lookups
        .iter()
        .filter(|l| l.counts().is_some_and(|c| url_score(&c) >= threshold))
        .map(|l| (l.url.as_str(), l.chain.landing_url.as_str()))
        .collect();
    // One task per landing page, shown with the first ad that led there.
    let mut first_ad: BTreeMap<&str, &str> = BTreeMap::new();
    let mut ads: Vec<&TweetRecord> = initial.iter().collect();
    ads.sort_by(|a, b| a.tweet_id.cmp(&b.tweet_id));
    for r in ads {
        for url in extract_embedded_urls(r).iter().filter_map(|u| canonical_url(u)) {
            if let Some(&landing) = unsafe_landing.get(url.as_str()) {
                first_ad.entry(landing).or_insert(r.tweet_id.as_str());
            }
        }
    }
    Ok(first_ad
        .into_iter()
        .map(|(landing, tweet)| TaskItem {
            tweet_id: tweet.to_string(),
            presented_text: landing.to_string(),
        })
        .collect())
}

pub fn run(ctx: &Ctx) -> anyhow::Result<Rows> {
    let cfg = &ctx.cfg.annotate;
    fs::create_dir_all(ctx.dir.join(HIDDEN_DIR))?;
    let store = SessionStore::open(ctx.dir.join(STORE_DIR))?;
    let mut b = Builder {
        ctx,
        store,
        rows: Rows::new(),
    };
    let (initial, _) = load_ads(ctx.run)?;
    let text: HashMap<&str, &TweetRecord> = initial.iter().map(|r| (r.tweet_id.as_str(), r)).collect();

    let mut sample: Vec<String> = read_csv::<SampleRow>(&ctx.upstream(Stage::Calibrate).join(SAMPLE_FILE))?
        .into_iter()
        .map(|s| s.tweet_id)
        .collect();
    sample.shuffle(&mut ChaCha8Rng::seed_from_u64(stable_seed(ctx.seed, "adult-sample")));
    sample.truncate(cfg.sample_size);
    sample.sort();
    b.add(
        "adult-binary",
        AnnotationKind::AdultBinary,
        items(sample, &text),
        AnnotationKind::AdultBinary.default_choice_set(&[]),
    )?;

    let flagged = load_adult(ctx.run)?.into_iter().map(|r| r.tweet_id);
    b.add(
        "fp-review",
        AnnotationKind::FpReview,
        items(flagged, &text),
        AnnotationKind::FpReview.default_choice_set(&[]),
    )?;

    b.blind("cluster-blind-above-floor", BLIND_ABOVE_FILE, &text)?;
    b.blind("cluster-blind-below-floor", BLIND_BELOW_FILE, &text)?;

    b.add(
        "landing-category",
        AnnotationKind::LandingCategory,
        landing_items(ctx, &initial)?,
        AnnotationKind::LandingCategory.default_choice_set(&cfg.extra_landing_categories),
    )?;

    let sessions: Vec<_> = b
        .store
        .session_ids()
        .iter()
        .map(|id| b.store.status(id))
        .collect::<Result<_, _>>()?;
    write_json(&ctx.dir.join("sessions.json"), &sessions)?;
    Ok(b.rows)
}

/// Copies exported sessions that are not yet in the live store.
pub fn seed_live_store(export_store: &Path, live: &Path) -> anyhow::Result<usize> {
    fs::create_dir_all(live)?;
    let mut copied = 0;
    for entry in fs::read_dir(export_store)? {
        let src = entry?.path();
        let Some(name) = src.file_name() else { continue };
        let dst = live.join(name);
        if !src.is_dir() || dst.exists() {
            continue;
        }
        fs::create_dir_all(&dst)?;
        for file in fs::read_dir(&src)? {
            let file = file?.path();
            if let Some(fname) = file.file_name() {
                fs::copy(&file, dst.join(fname))?;
            }
        }
        copied += 1;
    }
    Ok(copied)
}
