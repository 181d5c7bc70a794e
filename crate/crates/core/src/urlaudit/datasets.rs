use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::UrlVerdict;
use crate::corpus::TweetRecord;
use crate::explicit::ExplicitScore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyUrlRisk {
    pub date: NaiveDate,
    pub ads_total: usize,
    pub problematic_count: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScatterPartition {
    Adult,
    NonAdult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub tweet_id: String,
    pub embedded_total: u32,
    pub landing_total: u32,
    pub explicit_score: f64,
    pub partition: ScatterPartition,
}

/// Per-partition counts of ads by where the unsafe URL sits.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub ads: usize,
    /// Embedded total `>= url_threshold`.
    pub embedded_problematic: usize,
    /// Landing total `>= url_threshold`.
    pub landing_problematic: usize,
    pub both_problematic: usize,
    /// Embedded below threshold but landing at or above it.
    pub benign_embedded_unsafe_landing: usize,
    /// Score `>= url_threshold`.
    pub problematic: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrlRiskDatasets {
    pub daily: Vec<DailyUrlRisk>,
    pub scatter: Vec<ScatterRow>,
    pub adult: PartitionSummary,
    pub non_adult: PartitionSummary,
}

impl UrlRiskDatasets {
    /// Unweighted mean of the daily problematic fractions.
    pub fn mean_daily_fraction(&self) -> f64 {
        if self.daily.is_empty() {
            return 0.0;
        }
        self.daily.iter().map(|d| d.fraction).sum::<f64>() / self.daily.len() as f64
    }
}

/// Builds the daily problematic-ad series over `records` and the
/// embedded-vs-landing scatter joined with explicitness scores.
///
/// Ads without a verdict count as non-problematic in the daily series.
/// Verdicts without a score are left out of the scatter.
pub fn url_risk_datasets(
    records: &[TweetRecord],
    verdicts: &[UrlVerdict],
    scores: &[ExplicitScore],
    explicit_threshold: f64,
    url_threshold: u32,
) -> UrlRiskDatasets {
    let by_id: HashMap<&str, &UrlVerdict> =
        verdicts.iter().map(|v| (v.tweet_id.as_str(), v)).collect();

    let mut days: BTreeMap<NaiveDate, (usize, usize)> = BTreeMap::new();
    for record in records {
        let day = days.entry(record.created_at.date_naive()).or_default();
        day.0 += 1;
        if by_id
            .get(record.tweet_id.as_str())
            .is_some_and(|v| v.problematic)
        {
            day.1 += 1;
        }
    }
    let daily = days
        .into_iter()
        .map(|(date, (total, bad))| DailyUrlRisk {
            date,
            ads_total: total,
            problematic_count: bad,
            fraction: bad as f64 / total as f64,
        })
        .collect();

    let score_by_id: HashMap<&str, f64> =
        scores.iter().map(|s| (s.tweet_id.as_str(), s.score)).collect();
    let mut scatter = Vec::new();
    let mut adult = PartitionSummary::default();
    let mut non_adult = PartitionSummary::default();
    for verdict in verdicts {
        let Some(&explicit_score) = score_by_id.get(verdict.tweet_id.as_str()) else {
            continue;
        };
        let partition = if explicit_score >= explicit_threshold {
            ScatterPartition::Adult
        } else {
            ScatterPartition::NonAdult
        };
        let counts = verdict.counts();
        let (emb, land) = (counts.embedded_total(), counts.landing_total());
        let summary = match partition {
            ScatterPartition::Adult => &mut adult,
            ScatterPartition::NonAdult => &mut non_adult,
        };
        summary.ads += 1;
        let emb_bad = emb >= url_threshold;
        let land_bad = land >= url_threshold;
        summary.embedded_problematic += usize::from(emb_bad);
        summary.landing_problematic += usize::from(land_bad);
        summary.both_problematic += usize::from(emb_bad && land_bad);
        summary.benign_embedded_unsafe_landing += usize::from(!emb_bad && land_bad);
        summary.problematic += usize::from(emb_bad || land_bad);
        scatter.push(ScatterRow {
            tweet_id: verdict.tweet_id.clone(),
            embedded_total: emb,
            landing_total: land,
            explicit_score,
            partition,
        });
    }
    UrlRiskDatasets {
        daily,
        scatter,
        adult,
        non_adult,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::urlaudit::{score_tweet_urls, UrlCounts};
    use chrono::{Duration, TimeZone, Utc};

    fn score(id: &str, s: f64) -> ExplicitScore {
        ExplicitScore {
            tweet_id: id.to_string(),
            score: s,
            translated: false,
            scored_text: String::new(),
        }
    }

    #[test]
    fn partition_counts_match_published_breakdown() {
        let mut verdicts = Vec::new();
        let mut scores = Vec::new();
        let mut push = |id: String, c: UrlCounts, s: f64| {
            verdicts.push(score_tweet_urls(&id, &[c], 3));
            scores.push(score(&id, s));
        };
        for i in 0..3 {
            push(format!("ae{i}"), UrlCounts::new(3, 1, 1, 0), 0.8);
        }
        for i in 0..345 {
            push(format!("al{i}"), UrlCounts::new(0, 1, 4, 2), 0.6);
        }
        for i in 0..500 {
            push(format!("ab{i}"), UrlCounts::new(0, 0, 1, 0), 0.9);
        }
        for i in 0..103 {
            push(format!("n{i}"), UrlCounts::new(3, 0, 5, 0), 0.1);
        }
        for i in 0..900 {
            push(format!("nb{i}"), UrlCounts::new(0, 1, 0, 0), 0.05);
        }
        let ds = url_risk_datasets(&[], &verdicts, &scores, 0.3, 3);
        assert_eq!(ds.adult.embedded_problematic, 3);
        assert_eq!(ds.adult.benign_embedded_unsafe_landing, 345);
        assert_eq!(ds.non_adult.both_problematic, 103);
        assert_eq!(ds.non_adult.embedded_problematic, 103);
        assert_eq!(ds.non_adult.landing_problematic, 103);
        assert_eq!(ds.scatter.len(), verdicts.len());
    }

    #[test]
    fn average_daily_fraction() {
        // 40 days of 400 ads; 11 problematic per day = 2.75%.
        let start = Utc.with_ymd_and_hms(2022, 10, 1, 12, 0, 0).unwrap();
        let mut records = Vec::new();
        let mut verdicts = Vec::new();
        for day in 0..40 {
            for i in 0..400 {
                let id = format!("{day}-{i}");
                let r = TweetRecord::new(&id, "a", start + Duration::days(day), "Twitter Ads", "x");
                let bad = i < 11;
                let c = if bad { UrlCounts::new(0, 0, 3, 0) } else { UrlCounts::default() };
                verdicts.push(score_tweet_urls(&id, &[c], 3));
                records.push(r);
            }
        }
        let ds = url_risk_datasets(&records, &verdicts, &[], 0.3, 3);
        assert_eq!(ds.daily.len(), 40);
        assert!((ds.mean_daily_fraction() - 0.0275).abs() < 1e-12);
        assert!(ds.scatter.is_empty());
    }
}
