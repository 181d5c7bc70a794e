//! Diff the captures into retained and removed ads, with daily removal
//! rates and advertiser profiles.

use adaudit_core::moderation::{
    build_advertiser_profiles, creation_date_split, daily_removal_series, diff_snapshots, RehydrationStatus,
};
use chrono::Duration;
use serde_json::json;

use super::{load_ads, Ctx, PairRow, Rows};
use crate::output::{write_csv, write_json, write_jsonl};

pub const PAIRS_FILE: &str = "pairs.csv";

pub fn run(ctx: &Ctx) -> anyhow::Result<Rows> {
    let (initial, rehydrated) = load_ads(ctx.run)?;
    let window = Duration::days(ctx.cfg.moderation.rehydration_window_days);
    let pairs = diff_snapshots(&initial, &rehydrated, window, ctx.cfg.corpus.strictness)?;

    let rows: Vec<PairRow> = pairs
        .iter()
        .map(|p| PairRow {
            tweet_id: p.tweet_id.clone(),
            author_id: p.initial.author_id.clone(),
            lang: p.initial.lang.clone(),
            created_at: p.initial.created_at,
            status: p.status,
        })
        .collect();
    write_csv(&ctx.dir.join(PAIRS_FILE), &rows)?;
    write_csv(&ctx.dir.join("daily_removal.csv"), &daily_removal_series(&pairs))?;

    let profiles = build_advertiser_profiles(&pairs);
    write_jsonl(&ctx.dir.join("advertisers.jsonl"), &profiles)?;
    let start = ctx
        .cfg
        .moderation
        .collection_start
        .or_else(|| initial.iter().map(|r| r.captured_at).min());
    if let Some(start) = start {
        write_json(&ctx.dir.join("creation_split.json"), &creation_date_split(&profiles, start))?;
    }

    let removed = pairs.iter().filter(|p| p.status == RehydrationStatus::Removed).count();
    write_json(
        &ctx.dir.join("summary.json"),
        &json!({
            "total_ads": pairs.len(),
            "retained": pairs.len() - removed,
            "removed": removed,
            "advertisers": profiles.len(),
            "rehydration_window_days": ctx.cfg.moderation.rehydration_window_days,
        }),
    )?;
    Ok(Rows::from([
        ("pairs".into(), pairs.len()),
        ("removed".into(), removed),
        ("advertisers".into(), profiles.len()),
    ]))
}
