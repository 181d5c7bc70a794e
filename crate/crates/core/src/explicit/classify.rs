use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ExplicitError, ExplicitScore};
use crate::corpus::TweetRecord;

pub const DEFAULT_EXPLICIT_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdultSplit {
    pub adult: BTreeSet<String>,
    pub other: BTreeSet<String>,
}

/// Partitions scored ids by `score >= threshold`.
pub fn classify_adult(scores: &[ExplicitScore], threshold: f64) -> Result<AdultSplit, ExplicitError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(ExplicitError::InvalidThreshold(threshold));
    }
    let mut split = AdultSplit::default();
    for s in scores {
        if s.score >= threshold {
            split.adult.insert(s.tweet_id.clone());
        } else {
            split.other.insert(s.tweet_id.clone());
        }
    }
    Ok(split)
}

/// Removes manually confirmed false positives from the adult set.
pub fn apply_fp_removal(
    adult: &BTreeSet<String>,
    fp_ids: &BTreeSet<String>,
) -> Result<BTreeSet<String>, ExplicitError> {
    let unknown: Vec<String> = fp_ids.difference(adult).cloned().collect();
    if !unknown.is_empty() {
        return Err(ExplicitError::UnknownFalsePositive(unknown));
    }
    Ok(adult.difference(fp_ids).cloned().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageDisparityRow {
    pub lang: String,
    pub violating_moderated: usize,
    pub violating_unmoderated: usize,
    pub moderation_rate: f64,
}

/// Share of violating ads that were moderated, per language, highest rate
/// first (ties by language code).
pub fn language_disparity(
    adult_moderated: &[TweetRecord],
    adult_unmoderated: &[TweetRecord],
) -> Vec<LanguageDisparityRow> {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in adult_moderated {
        counts.entry(&r.lang).or_default().0 += 1;
    }
    for r in adult_unmoderated {
        counts.entry(&r.lang).or_default().1 += 1;
    }
    let mut rows: Vec<LanguageDisparityRow> = counts
        .into_iter()
        .map(|(lang, (m, u))| LanguageDisparityRow {
            lang: lang.to_string(),
            violating_moderated: m,
            violating_unmoderated: u,
            moderation_rate: m as f64 / (m + u) as f64,
        })
        .collect();
    rows.sort_by(|a, b| {
        b.moderation_rate
            .total_cmp(&a.moderation_rate)
            .then_with(|| a.lang.cmp(&b.lang))
    });
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn s(id: &str, score: f64) -> ExplicitScore {
        ExplicitScore {
            tweet_id: id.into(),
            score,
            translated: false,
            scored_text: String::new(),
        }
    }

    fn recs(lang: &str, n: usize, tag: &str) -> Vec<TweetRecord> {
        (0..n)
            .map(|i| {
                let mut r = TweetRecord::new(
                    format!("{lang}-{tag}-{i}"),
                    "a",
                    Utc.with_ymd_and_hms(2022, 10, 1, 0, 0, 0).unwrap(),
                    "Twitter Ads",
                    "x",
                );
                r.lang = lang.into();
                r
            })
            .collect()
    }

    #[test]
    fn boundary_is_inclusive() {
        let split = classify_adult(&[s("a", 0.29), s("b", 0.30), s("c", 0.95)], 0.3).unwrap();
        assert_eq!(split.adult, BTreeSet::from(["b".to_string(), "c".to_string()]));
        assert_eq!(split.other, BTreeSet::from(["a".to_string()]));
        assert_eq!(classify_adult(&[], 0.3).unwrap(), AdultSplit::default());
        assert!(classify_adult(&[], 1.0).is_err());
        assert!(classify_adult(&[], 0.0).is_err());
    }

    #[test]
    fn fp_removal() {
        let adult: BTreeSet<String> = (0..4991).map(|i| i.to_string()).collect();
        let fps: BTreeSet<String> = (0..118).map(|i| (i * 3).to_string()).collect();
        assert_eq!(apply_fp_removal(&adult, &fps).unwrap().len(), 4873);
        assert_eq!(apply_fp_removal(&adult, &BTreeSet::new()).unwrap(), adult);
        let stray = BTreeSet::from(["zz".to_string()]);
        assert_eq!(
            apply_fp_removal(&adult, &stray),
            Err(ExplicitError::UnknownFalsePositive(vec!["zz".into()]))
        );
    }

    #[test]
    fn disparity_rates() {
        let mut moderated = recs("ja", 5, "m");
        moderated.extend(recs("in", 136, "m"));
        moderated.extend(recs("ar", 250, "m"));
        let mut unmoderated = recs("ja", 171, "u");
        unmoderated.extend(recs("in", 504, "u"));
        unmoderated.extend(recs("ar", 789, "u"));
        let rows = language_disparity(&moderated, &unmoderated);
        let langs: Vec<&str> = rows.iter().map(|r| r.lang.as_str()).collect();
        assert_eq!(langs, ["ar", "in", "ja"]);
        assert!((rows[0].moderation_rate - 0.2406).abs() < 5e-5);
        assert!((rows[1].moderation_rate - 0.2125).abs() < 5e-5);
        assert!((rows[2].moderation_rate - 0.0284).abs() < 5e-5);
        let total: usize = rows.iter().map(|r| r.violating_moderated).sum();
        assert_eq!(total, moderated.len());
    }
}
