//! Moderation inference from snapshot diffs, plus advertiser analytics.
//!
//! A tweet that is present in the initial capture but absent from the
//! rehydrated capture is `Removed`. Removal conflates platform moderation with
//! deletion by the advertiser; the two cannot be told apart from the API.

use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Strictness, TweetRecord};

/// Default delay between initial capture and rehydration.
pub fn default_rehydration_window() -> Duration {
    Duration::days(14)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RehydrationStatus {
    Retained,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotPair {
    pub tweet_id: String,
    pub initial: TweetRecord,
    pub status: RehydrationStatus,
    /// Present iff `status` is `Retained`.
    pub rehydrated: Option<TweetRecord>,
    pub rehydration_window_secs: i64,
}

impl SnapshotPair {
    pub fn is_removed(&self) -> bool {
        self.status == RehydrationStatus::Removed
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModerationError {
    #[error(
        "tweet {tweet_id} was rehydrated at {rehydrated_at}, before the window closed at {window_end}"
    )]
    WindowViolation {
        tweet_id: String,
        rehydrated_at: DateTime<Utc>,
        window_end: DateTime<Utc>,
    },
}

/// Classifies every initial record as retained or removed.
///
/// Duplicate initial ids keep their first occurrence. In strict mode a
/// rehydrated capture taken before `initial.captured_at + window` is an error;
/// in lenient mode it is accepted with a warning.
pub fn diff_snapshots(
    initial: &[TweetRecord],
    rehydrated: &[TweetRecord],
    window: Duration,
    strictness: Strictness,
) -> Result<Vec<SnapshotPair>, ModerationError> {
    let by_id: HashMap<&str, &TweetRecord> = rehydrated
        .iter()
        .map(|r| (r.tweet_id.as_str(), r))
        .collect();
    let mut seen = HashSet::new();
    let mut pairs = Vec::with_capacity(initial.len());
    for record in initial {
        if !seen.insert(record.tweet_id.as_str()) {
            continue;
        }
        let found = by_id.get(record.tweet_id.as_str()).copied();
        if let Some(later) = found {
            let window_end = record.captured_at + window;
            if later.captured_at < window_end {
                let err = ModerationError::WindowViolation {
                    tweet_id: record.tweet_id.clone(),
                    rehydrated_at: later.captured_at,
                    window_end,
                };
                match strictness {
                    Strictness::Strict => return Err(err),
                    Strictness::Lenient => log::warn!("{err}"),
                }
            }
        }
        pairs.push(SnapshotPair {
            tweet_id: record.tweet_id.clone(),
            initial: record.clone(),
            status: if found.is_some() {
                RehydrationStatus::Retained
            } else {
                RehydrationStatus::Removed
            },
            rehydrated: found.cloned(),
            rehydration_window_secs: window.num_seconds(),
        });
    }
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRemoval {
    pub date: NaiveDate,
    #[serde(rename = "total")]
    pub ads_total: usize,
    #[serde(rename = "removed")]
    pub ads_removed: usize,
    #[serde(rename = "fraction")]
    pub removal_fraction: f64,
}

/// One row per UTC calendar day of `initial.created_at` that has ads.
pub fn daily_removal_series(pairs: &[SnapshotPair]) -> Vec<DailyRemoval> {
    let mut days: BTreeMap<NaiveDate, (usize, usize)> = BTreeMap::new();
    for pair in pairs {
        let entry = days.entry(pair.initial.created_at.date_naive()).or_default();
        entry.0 += 1;
        if pair.is_removed() {
            entry.1 += 1;
        }
    }
    days.into_iter()
        .map(|(date, (total, removed))| DailyRemoval {
            date,
            ads_total: total,
            ads_removed: removed,
            removal_fraction: removed as f64 / total as f64,
        })
        .collect()
}

/// Unweighted mean of daily removal fractions over `[from, to]`.
pub fn mean_daily_fraction(series: &[DailyRemoval], from: NaiveDate, to: NaiveDate) -> Option<f64> {
    let picked: Vec<f64> = series
        .iter()
        .filter(|d| d.date >= from && d.date <= to)
        .map(|d| d.removal_fraction)
        .collect();
    if picked.is_empty() {
        None
    } else {
        Some(picked.iter().sum::<f64>() / picked.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvertiserProfile {
    pub author_id: String,
    /// Distinct usernames in first-seen order.
    pub usernames_seen: Vec<String>,
    pub account_created_at: Option<DateTime<Utc>>,
    /// From the most recent capture of this author.
    pub follower_count: u64,
    pub following_count: u64,
    pub ads_total: usize,
    pub ads_removed: usize,
}

/// Aggregates pairs by author. Profiles come out in first-seen author order.
pub fn build_advertiser_profiles(pairs: &[SnapshotPair]) -> Vec<AdvertiserProfile> {
    let mut order: Vec<String> = Vec::new();
    let mut profiles: HashMap<String, (AdvertiserProfile, DateTime<Utc>)> = HashMap::new();
    for pair in pairs {
        let observations = std::iter::once(&pair.initial).chain(pair.rehydrated.as_ref());
        let author = pair.initial.author_id.clone();
        let (profile, latest) = profiles.entry(author.clone()).or_insert_with(|| {
            order.push(author.clone());
            (
                AdvertiserProfile {
                    author_id: author,
                    usernames_seen: Vec::new(),
                    account_created_at: None,
                    follower_count: pair.initial.follower_count,
                    following_count: pair.initial.following_count,
                    ads_total: 0,
                    ads_removed: 0,
                },
                pair.initial.captured_at,
            )
        });
        profile.ads_total += 1;
        if pair.is_removed() {
            profile.ads_removed += 1;
        }
        for obs in observations {
            if !profile.usernames_seen.contains(&obs.username) {
                profile.usernames_seen.push(obs.username.clone());
            }
            if profile.account_created_at.is_none() {
                profile.account_created_at = obs.account_created_at;
            }
            if obs.captured_at >= *latest {
                *latest = obs.captured_at;
                profile.follower_count = obs.follower_count;
                profile.following_count = obs.following_count;
            }
        }
    }
    order
        .into_iter()
        .filter_map(|a| profiles.remove(&a).map(|(p, _)| p))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub at: DateTime<Utc>,
    pub cumulative_fraction: f64,
}

/// Account-creation split for one group of advertisers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreationGroup {
    pub profiles: usize,
    pub created_before: usize,
    /// Created at or after the collection start.
    pub created_after: usize,
    /// No account creation time observed.
    pub unknown: usize,
    /// `created_after / (created_before + created_after)`, 0 when both are 0.
    pub after_fraction: f64,
    pub before_fraction: f64,
    pub creation_cdf: Vec<CdfPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreationSplitReport {
    pub collection_start: DateTime<Utc>,
    pub any_removed: CreationGroup,
    pub none_removed: CreationGroup,
    pub all: CreationGroup,
}

fn creation_group<'a>(
    profiles: impl Iterator<Item = &'a AdvertiserProfile>,
    start: DateTime<Utc>,
) -> CreationGroup {
    let mut count = 0;
    let mut unknown = 0;
    let mut stamps = Vec::new();
    for p in profiles {
        count += 1;
        match p.account_created_at {
            Some(at) => stamps.push(at),
            None => unknown += 1,
        }
    }
    stamps.sort();
    let after = stamps.iter().filter(|&&t| t >= start).count();
    let before = stamps.len() - after;
    let known = stamps.len();
    let frac = |x: usize| if known == 0 { 0.0 } else { x as f64 / known as f64 };
    let creation_cdf = stamps
        .iter()
        .enumerate()
        .map(|(i, &at)| CdfPoint {
            at,
            cumulative_fraction: (i + 1) as f64 / known as f64,
        })
        .collect();
    CreationGroup {
        profiles: count,
        created_before: before,
        created_after: after,
        unknown,
        after_fraction: frac(after),
        before_fraction: frac(before),
        creation_cdf,
    }
}

pub fn creation_date_split(
    profiles: &[AdvertiserProfile],
    collection_start: DateTime<Utc>,
) -> CreationSplitReport {
    CreationSplitReport {
        collection_start,
        any_removed: creation_group(profiles.iter().filter(|p| p.ads_removed > 0), collection_start),
        none_removed: creation_group(
            profiles.iter().filter(|p| p.ads_removed == 0),
            collection_start,
        ),
        all: creation_group(profiles.iter(), collection_start),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2022, 10, 1, 9, 0, 0).unwrap()
    }

    fn ad(id: &str, author: &str, user: &str, day: i64) -> TweetRecord {
        let mut r = TweetRecord::new(id, author, t0() + Duration::days(day), "Twitter Ads", "x");
        r.username = user.to_string();
        r
    }

    fn rehydrate(r: &TweetRecord) -> TweetRecord {
        let mut later = r.clone();
        later.captured_at = r.captured_at + Duration::days(14);
        later
    }

    fn ids(pairs: &[SnapshotPair], status: RehydrationStatus) -> Vec<&str> {
        pairs
            .iter()
            .filter(|p| p.status == status)
            .map(|p| p.tweet_id.as_str())
            .collect()
    }

    #[test]
    fn diff_is_set_difference() {
        let initial = vec![ad("A", "x", "u", 0), ad("B", "x", "u", 0), ad("C", "x", "u", 0)];
        let rehydrated = vec![rehydrate(&initial[0]), rehydrate(&initial[2])];
        let pairs = diff_snapshots(
            &initial,
            &rehydrated,
            default_rehydration_window(),
            Strictness::Strict,
        )
        .unwrap();
        assert_eq!(ids(&pairs, RehydrationStatus::Removed), ["B"]);
        assert_eq!(ids(&pairs, RehydrationStatus::Retained), ["A", "C"]);
        assert!(pairs[0].rehydrated.is_some() && pairs[1].rehydrated.is_none());
        assert!(diff_snapshots(&[], &rehydrated, Duration::days(14), Strictness::Strict)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn diff_at_corpus_scale() {
        let initial: Vec<_> = (0..34_606).map(|i| ad(&i.to_string(), "a", "u", 0)).collect();
        let rehydrated: Vec<_> = initial[..24_530].iter().map(rehydrate).collect();
        let pairs =
            diff_snapshots(&initial, &rehydrated, Duration::days(14), Strictness::Strict).unwrap();
        let removed = pairs.iter().filter(|p| p.is_removed()).count();
        // The published removal count is 10,306; the set difference of the
        // published snapshot sizes is 10,076.
        assert_eq!(removed, 10_076);
        assert_eq!(removed + 24_530, 34_606);
    }

    #[test]
    fn early_rehydration_violates_window() {
        let initial = vec![ad("A", "x", "u", 0)];
        let mut early = initial[0].clone();
        early.captured_at += Duration::days(3);
        let err = diff_snapshots(&initial, &[early.clone()], Duration::days(14), Strictness::Strict)
            .unwrap_err();
        assert!(matches!(err, ModerationError::WindowViolation { .. }));
        let pairs =
            diff_snapshots(&initial, &[early], Duration::days(14), Strictness::Lenient).unwrap();
        assert_eq!(pairs[0].status, RehydrationStatus::Retained);
    }

    fn pairs_for(days: &[(i64, usize, usize)]) -> Vec<SnapshotPair> {
        let mut initial = Vec::new();
        let mut rehydrated = Vec::new();
        for &(day, total, removed) in days {
            for i in 0..total {
                let r = ad(&format!("{day}-{i}"), &format!("a{i}"), "u", day);
                if i >= removed {
                    rehydrated.push(rehydrate(&r));
                }
                initial.push(r);
            }
        }
        diff_snapshots(&initial, &rehydrated, Duration::days(14), Strictness::Strict).unwrap()
    }

    #[test]
    fn daily_series_examples() {
        let series = daily_removal_series(&pairs_for(&[(0, 4, 1)]));
        assert_eq!(series.len(), 1);
        assert_eq!(series[0].removal_fraction, 0.25);

        let series = daily_removal_series(&pairs_for(&[(0, 10, 2), (1, 10, 8)]));
        let mean = mean_daily_fraction(&series, series[0].date, series[1].date).unwrap();
        assert!((mean - 0.5).abs() < 1e-12);
    }

    #[test]
    fn window_averages_before_and_after_mid_november() {
        // Daily counts spanning Oct 1 .. Dec 31 2022; removal fractions drawn
        // from 15-55% before Nov 15 and up to 75% afterwards.
        let pre = [0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.55, 0.25, 0.22, 0.13];
        let post = [0.30, 0.40, 0.50, 0.75, 0.45, 0.36, 0.42, 0.34];
        let start = NaiveDate::from_ymd_opt(2022, 10, 1).unwrap();
        let cutoff = NaiveDate::from_ymd_opt(2022, 11, 15).unwrap();
        let mut days = Vec::new();
        let mut offset = 0i64;
        while start + Duration::days(offset) <= NaiveDate::from_ymd_opt(2022, 12, 31).unwrap() {
            let date = start + Duration::days(offset);
            let pattern: &[f64] = if date < cutoff { &pre } else { &post };
            let frac = pattern[offset as usize % pattern.len()];
            days.push((offset, 100, (frac * 100.0).round() as usize));
            offset += 1;
        }
        let series = daily_removal_series(&pairs_for(&days));
        let before = mean_daily_fraction(&series, start, cutoff.pred_opt().unwrap()).unwrap();
        let after = mean_daily_fraction(&series, cutoff, NaiveDate::MAX).unwrap();
        assert!((before - 0.28).abs() < 0.01, "before = {before}");
        assert!((after - 0.44).abs() < 0.01, "after = {after}");
    }

    #[test]
    fn profiles_track_username_churn() {
        let initial = vec![
            ad("1", "auth", "u1", 0),
            ad("2", "auth", "u2", 1),
            ad("3", "auth", "u1", 2),
        ];
        let pairs = diff_snapshots(&initial, &[], Duration::days(14), Strictness::Strict).unwrap();
        let profiles = build_advertiser_profiles(&pairs);
        assert_eq!(profiles.len(), 1);
        assert_eq!(profiles[0].usernames_seen, ["u1", "u2"]);
        assert_eq!(profiles[0].ads_total, 3);
        assert_eq!(profiles[0].ads_removed, 3);
        assert!(build_advertiser_profiles(&[]).is_empty());
    }

    #[test]
    fn forty_nine_usernames_on_one_author() {
        let initial: Vec<_> = (0..120)
            .map(|i| ad(&i.to_string(), "spammer", &format!("name{}", i % 49), 0))
            .collect();
        let pairs = diff_snapshots(&initial, &[], Duration::days(14), Strictness::Strict).unwrap();
        let profiles = build_advertiser_profiles(&pairs);
        assert_eq!(profiles[0].usernames_seen.len(), 49);
    }

    fn profile(i: usize, removed: bool, created: DateTime<Utc>) -> AdvertiserProfile {
        AdvertiserProfile {
            author_id: i.to_string(),
            usernames_seen: vec![format!("u{i}")],
            account_created_at: Some(created),
            follower_count: 0,
            following_count: 0,
            ads_total: 1,
            ads_removed: usize::from(removed),
        }
    }

    #[test]
    fn creation_split_matches_published_ratios() {
        let start = t0();
        // 2,089 removed-ad advertisers, 915 created after the start.
        let mut profiles: Vec<_> = (0..2089)
            .map(|i| {
                let created = if i < 915 {
                    start + Duration::days(1 + (i % 60) as i64)
                } else {
                    start - Duration::days(1 + (i % 900) as i64)
                };
                profile(i, true, created)
            })
            .collect();
        // 8,132 more advertisers with nothing removed, for 10,221 in total of
        // which 80% were created before the start.
        let total = 10_221;
        let before_target = (0.8 * total as f64).round() as usize;
        let before_so_far = 2089 - 915;
        for i in 2089..total {
            let created = if i - 2089 < before_target - before_so_far {
                start - Duration::days(30)
            } else {
                start + Duration::days(30)
            };
            profiles.push(profile(i, false, created));
        }
        let report = creation_date_split(&profiles, start);
        assert_eq!(report.any_removed.profiles, 2089);
        assert_eq!(report.any_removed.created_after, 915);
        assert!((report.any_removed.after_fraction - 0.438).abs() < 5e-4);
        assert_eq!(report.all.profiles, 10_221);
        assert!((report.all.before_fraction - 0.80).abs() < 1e-4);
        assert_eq!(report.any_removed.profiles + report.none_removed.profiles, profiles.len());
        let cdf = &report.any_removed.creation_cdf;
        assert_eq!(cdf.last().unwrap().cumulative_fraction, 1.0);
    }

    #[test]
    fn creation_split_all_before() {
        let start = t0();
        let profiles: Vec<_> = (0..10)
            .map(|i| profile(i, i % 2 == 0, start - Duration::days(5)))
            .collect();
        let report = creation_date_split(&profiles, start);
        assert_eq!(report.any_removed.after_fraction, 0.0);
        assert_eq!(report.none_removed.after_fraction, 0.0);
    }

    proptest! {
        #[test]
        fn partition_and_tally_invariants(
            spec in proptest::collection::vec((0i64..5, 0usize..4, any::<bool>()), 0..60)
        ) {
            let mut initial = Vec::new();
            let mut rehydrated = Vec::new();
            for (i, &(day, author, keep)) in spec.iter().enumerate() {
                let r = ad(&i.to_string(), &author.to_string(), &format!("n{}", i % 3), day);
                if keep { rehydrated.push(rehydrate(&r)); }
                initial.push(r);
            }
            let pairs = diff_snapshots(&initial, &rehydrated, Duration::days(14), Strictness::Strict).unwrap();
            prop_assert_eq!(pairs.len(), initial.len());
            let removed = pairs.iter().filter(|p| p.is_removed()).count();
            prop_assert_eq!(removed, spec.iter().filter(|s| !s.2).count());

            let series = daily_removal_series(&pairs);
            prop_assert_eq!(series.iter().map(|d| d.ads_removed).sum::<usize>(), removed);
            prop_assert!(series.iter().all(|d| (0.0..=1.0).contains(&d.removal_fraction)));

            let profiles = build_advertiser_profiles(&pairs);
            prop_assert_eq!(profiles.iter().map(|p| p.ads_total).sum::<usize>(), pairs.len());
            prop_assert!(profiles.iter().all(|p| p.ads_removed <= p.ads_total && !p.usernames_seen.is_empty()));

            let split = creation_date_split(&profiles, t0());
            prop_assert_eq!(split.any_removed.profiles + split.none_removed.profiles, profiles.len());
        }
    }
}
