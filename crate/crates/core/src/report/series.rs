use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::ReportError;
use crate::corpus::TweetRecord;
use crate::explicit::ExplicitScore;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreCdfPoint {
    pub score: f64,
    pub count_at_or_below: usize,
    pub total: usize,
    pub cumulative_fraction: f64,
}

/// Empirical CDF of scores evaluated on a grid from 0 to 1.
pub fn score_cdf(scores: &[ExplicitScore], grid_step: f64) -> Result<Vec<ScoreCdfPoint>, ReportError> {
    if !(grid_step > 0.0 && grid_step < 1.0) {
        return Err(ReportError::InvalidGridStep(grid_step));
    }
    if scores.is_empty() {
        return Ok(Vec::new());
    }
    let mut sorted: Vec<f64> = scores.iter().map(|s| s.score).collect();
    sorted.sort_by(f64::total_cmp);
    let steps = (1.0 / grid_step).ceil() as usize;
    let total = sorted.len();
    Ok((0..=steps)
        .map(|k| {
            // Dividing by the step count keeps grid points like 0.3 exact.
            let exact = (steps as f64 * grid_step - 1.0).abs() < 1e-9;
            let x = if k == steps {
                1.0
            } else if exact {
                k as f64 / steps as f64
            } else {
                k as f64 * grid_step
            };
            let count = sorted.partition_point(|&s| s <= x);
            ScoreCdfPoint {
                score: x,
                count_at_or_below: count,
                total,
                cumulative_fraction: count as f64 / total as f64,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekdayRow {
    pub weekday: String,
    /// Occurrences of this weekday in the observation window.
    pub days: usize,
    pub total_ads: usize,
    pub total_advertisers: usize,
    pub mean_ads: f64,
    pub mean_distinct_advertisers: f64,
}

/// Mean ads and distinct advertisers per weekday, Monday first, over the
/// calendar days spanned by the records (UTC).
pub fn weekday_trend(records: &[TweetRecord]) -> Vec<WeekdayRow> {
    let mut per_day: BTreeMap<NaiveDate, (usize, HashSet<&str>)> = BTreeMap::new();
    for r in records {
        let e = per_day.entry(r.created_at.date_naive()).or_default();
        e.0 += 1;
        e.1.insert(&r.author_id);
    }
    let mut rows: Vec<WeekdayRow> = (0..7)
        .map(|i| WeekdayRow {
            weekday: Weekday::try_from(i as u8).expect("0..7").to_string(),
            days: 0,
            total_ads: 0,
            total_advertisers: 0,
            mean_ads: 0.0,
            mean_distinct_advertisers: 0.0,
        })
        .collect();
    if let (Some(&first), Some(&last)) = (per_day.keys().next(), per_day.keys().next_back()) {
        for day in first.iter_days().take_while(|d| *d <= last) {
            let row = &mut rows[day.weekday().num_days_from_monday() as usize];
            row.days += 1;
            if let Some((ads, authors)) = per_day.get(&day) {
                row.total_ads += ads;
                row.total_advertisers += authors.len();
            }
        }
    }
    for row in &mut rows {
        if row.days > 0 {
            row.mean_ads = row.total_ads as f64 / row.days as f64;
            row.mean_distinct_advertisers = row.total_advertisers as f64 / row.days as f64;
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageShare {
    pub lang: String,
    pub count: usize,
    pub total: usize,
    pub fraction: f64,
}

/// Ads per language, most frequent first.
pub fn language_distribution(records: &[TweetRecord]) -> Vec<LanguageShare> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(&r.lang).or_default() += 1;
    }
    let total = records.len();
    let mut rows: Vec<LanguageShare> = counts
        .into_iter()
        .map(|(lang, count)| LanguageShare {
            lang: lang.to_string(),
            count,
            total,
            fraction: count as f64 / total as f64,
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.lang.cmp(&b.lang)));
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyViolating {
    pub date: NaiveDate,
    pub ads_total: usize,
    pub violating: usize,
    pub fraction: f64,
}

/// Per-day count of ads in `violating` against all ads posted that day.
pub fn daily_violating_series(records: &[TweetRecord], violating: &BTreeSet<String>) -> Vec<DailyViolating> {
    let mut days: BTreeMap<NaiveDate, (usize, usize)> = BTreeMap::new();
    for r in records {
        let e = days.entry(r.created_at.date_naive()).or_default();
        e.0 += 1;
        if violating.contains(&r.tweet_id) {
            e.1 += 1;
        }
    }
    days.into_iter()
        .map(|(date, (ads_total, v))| DailyViolating {
            date,
            ads_total,
            violating: v,
            fraction: v as f64 / ads_total as f64,
        })
        .collect()
}
