//! Resolve, look up and score every embedded URL.

use std::time::Duration;

use adaudit_core::urlaudit::{audit_urls, threshold_sensitivity, UrlAuditConfig, UrlCounts};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{load_ads, Ctx, Rows};
use crate::output::{write_csv, write_json, write_jsonl};

pub const VERDICTS_FILE: &str = "verdicts.csv";
pub const LOOKUPS_FILE: &str = "lookups.jsonl";
pub const SENSITIVITY_FILE: &str = "sensitivity.csv";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub threshold: u32,
    pub problematic: usize,
}

pub fn run(ctx: &Ctx) -> anyhow::Result<Rows> {
    let u = &ctx.cfg.urls;
    let (initial, _) = load_ads(ctx.run)?;
    let cfg = UrlAuditConfig {
        max_hops: u.max_hops,
        timeout: Duration::from_secs(u.timeout_secs),
        threshold: u.threshold,
        workers: u.workers,
    };
    let fetcher = ctx.clients.fetcher();
    let reputation = ctx.clients.reputation()?;
    let outcome = audit_urls(&initial, fetcher.as_ref(), reputation.as_ref(), &cfg);
    if outcome.failed_lookups > 0 {
        log::warn!("{} URL lookups failed; see lookups.jsonl", outcome.failed_lookups);
    }
    write_jsonl(&ctx.dir.join(LOOKUPS_FILE), &outcome.lookups)?;
    write_csv(&ctx.dir.join(VERDICTS_FILE), &outcome.verdicts)?;
    let per_tweet: Vec<Vec<UrlCounts>> = outcome.per_tweet.iter().map(|(_, c)| c.clone()).collect();
    let sensitivity: Vec<SensitivityRow> = threshold_sensitivity(&per_tweet, &u.sensitivity_thresholds)
        .into_iter()
        .map(|(threshold, problematic)| SensitivityRow { threshold, problematic })
        .collect();
    write_csv(&ctx.dir.join(SENSITIVITY_FILE), &sensitivity)?;
    let problematic = outcome.verdicts.iter().filter(|v| v.problematic).count();
    write_json(
        &ctx.dir.join("summary.json"),
        &json!({
            "ads_with_urls": outcome.verdicts.len(),
            "distinct_urls": outcome.lookups.len(),
            "failed_lookups": outcome.failed_lookups,
            "unscanned_lookups": outcome.unscanned_lookups,
            "problematic": problematic,
            "threshold": u.threshold,
        }),
    )?;
    Ok(Rows::from([
        ("distinct_urls".into(), outcome.lookups.len()),
        ("verdicts".into(), outcome.verdicts.len()),
        ("problematic".into(), problematic),
        ("failed_lookups".into(), outcome.failed_lookups),
    ]))
}
