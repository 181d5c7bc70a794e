//! Parse both captures, keep ads, and store them as finalized snapshots.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use adaudit_core::corpus::{
    filter_ads, parse_tweet_stream, CorpusStore, ParseStats, Strictness, TweetRecord, INITIAL_LABEL,
    REHYDRATED_LABEL,
};
use anyhow::Context;
use serde::Serialize;

use super::{required_input, Ctx, Rows};
use crate::output::write_json;

pub const CORPUS_DIR: &str = "corpus";

#[derive(Serialize)]
struct SnapshotSummary {
    parse: ParseStats,
    ads: usize,
    non_ads: usize,
    stored: usize,
    duplicates: usize,
}

fn parse(path: &Path, strictness: Strictness) -> anyhow::Result<(Vec<TweetRecord>, ParseStats)> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_tweet_stream(BufReader::new(file), strictness).with_context(|| format!("parsing {}", path.display()))
}

pub fn run(ctx: &Ctx) -> anyhow::Result<Rows> {
    let inputs = &ctx.cfg.inputs;
    let corpus = &ctx.cfg.corpus;
    let mut store = CorpusStore::open(ctx.dir.join(CORPUS_DIR))?;
    let mut summary = std::collections::BTreeMap::new();
    let mut rows = Rows::new();
    for (label, path, field) in [
        (INITIAL_LABEL, &inputs.initial, "inputs.initial"),
        (REHYDRATED_LABEL, &inputs.rehydrated, "inputs.rehydrated"),
    ] {
        let (records, stats) = parse(required_input(path, field)?, corpus.strictness)?;
        let ads = filter_ads(&records, &corpus.ad_sources);
        let receipt = store.store_snapshot(label, &ads)?;
        store.finalize(label)?;
        if stats.dropped > 0 || receipt.duplicates > 0 {
            log::warn!(
                "{label}: dropped {} malformed lines, skipped {} duplicate ads",
                stats.dropped,
                receipt.duplicates
            );
        }
        rows.insert(format!("{label}_ads"), receipt.written);
        summary.insert(
            label,
            SnapshotSummary {
                parse: stats,
                ads: ads.len(),
                non_ads: records.len() - ads.len(),
                stored: receipt.written,
                duplicates: receipt.duplicates,
            },
        );
    }
    write_json(&ctx.dir.join("summary.json"), &summary)?;
    Ok(rows)
}
