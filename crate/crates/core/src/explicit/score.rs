use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ExplicitError;
use crate::corpus::TweetRecord;
use crate::services::{ExplicitnessClient, ServiceError, TranslationClient};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitScore {
    pub tweet_id: String,
    /// Probability in `[0, 1]`.
    pub score: f64,
    pub translated: bool,
    /// The text actually sent to the scorer.
    pub scored_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringFailure {
    pub tweet_id: String,
    pub stage: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoringOutcome {
    /// Successful scores, in input order.
    pub scores: Vec<ExplicitScore>,
    /// Records without a score. Never defaulted to 0.
    pub failures: Vec<ScoringFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringOptions {
    /// Language codes scored without translation. `en` also covers `en-GB`
    /// and other `en-*` tags.
    pub untranslated_langs: Vec<String>,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        Self {
            untranslated_langs: vec!["en".to_string()],
        }
    }
}

impl ScoringOptions {
    pub fn needs_translation(&self, lang: &str) -> bool {
        !self.untranslated_langs.iter().any(|code| {
            lang.eq_ignore_ascii_case(code)
                || (lang.len() > code.len()
                    && lang[..code.len()].eq_ignore_ascii_case(code)
                    && lang.as_bytes()[code.len()] == b'-')
        })
    }
}

enum Scored {
    Ok(ExplicitScore),
    Failed(ScoringFailure),
    Quota(String),
}

fn failure(record: &TweetRecord, stage: &str, err: &ServiceError) -> Scored {
    if let ServiceError::QuotaExceeded { service } = err {
        return Scored::Quota(service.clone());
    }
    Scored::Failed(ScoringFailure {
        tweet_id: record.tweet_id.clone(),
        stage: stage.to_string(),
        error: err.to_string(),
    })
}

fn score_one(
    record: &TweetRecord,
    translator: &dyn TranslationClient,
    scorer: &dyn ExplicitnessClient,
    options: &ScoringOptions,
) -> Scored {
    let translated = options.needs_translation(&record.lang);
    let text = if translated {
        match translator.translate(&record.text, &record.lang) {
            Ok(t) => t,
            Err(e) => return failure(record, "translate", &e),
        }
    } else {
        record.text.clone()
    };
    match scorer.score(&text) {
        Ok(score) => Scored::Ok(ExplicitScore {
            tweet_id: record.tweet_id.clone(),
            score,
            translated,
            scored_text: text,
        }),
        Err(e) => failure(record, "score", &e),
    }
}

/// Translates (when needed) and scores every record.
///
/// Per-record failures are collected; an exhausted quota aborts the whole
/// batch since every later call would fail too.
pub fn score_texts(
    records: &[TweetRecord],
    translator: &dyn TranslationClient,
    scorer: &dyn ExplicitnessClient,
    options: &ScoringOptions,
) -> Result<ScoringOutcome, ExplicitError> {
    let results: Vec<Scored> = records
        .par_iter()
        .map(|r| score_one(r, translator, scorer, options))
        .collect();
    let mut outcome = ScoringOutcome::default();
    for result in results {
        match result {
            Scored::Ok(s) => outcome.scores.push(s),
            Scored::Failed(f) => outcome.failures.push(f),
            Scored::Quota(service) => return Err(ExplicitError::QuotaExceeded { service }),
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use std::collections::HashMap;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct MapScorer(HashMap<String, Result<f64, ServiceError>>);

    impl ExplicitnessClient for MapScorer {
        fn score(&self, text: &str) -> Result<f64, ServiceError> {
            self.0.get(text).cloned().unwrap_or(Err(ServiceError::CassetteMiss {
                service: "perspective".into(),
                key: text.into(),
            }))
        }
    }

    #[derive(Default)]
    struct UpperTranslator(AtomicUsize);

    impl TranslationClient for UpperTranslator {
        fn translate(&self, text: &str, _lang: &str) -> Result<String, ServiceError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(format!("EN:{text}"))
        }
    }

    fn rec(id: &str, lang: &str, text: &str) -> TweetRecord {
        let mut r = TweetRecord::new(
            id,
            "a",
            Utc.with_ymd_and_hms(2022, 10, 1, 0, 0, 0).unwrap(),
            "Twitter Ads",
            text,
        );
        r.lang = lang.to_string();
        r
    }

    #[test]
    fn english_passes_through() {
        let scorer = MapScorer(HashMap::from([("hi".to_string(), Ok(0.91))]));
        let translator = UpperTranslator::default();
        let out = score_texts(&[rec("1", "en", "hi")], &translator, &scorer, &ScoringOptions::default())
            .unwrap();
        assert_eq!(out.scores[0].score, 0.91);
        assert!(!out.scores[0].translated);
        assert_eq!(out.scores[0].scored_text, "hi");
        assert_eq!(translator.0.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn japanese_is_translated_first() {
        let scorer = MapScorer(HashMap::from([("EN:こんにちは".to_string(), Ok(0.2))]));
        let translator = UpperTranslator::default();
        let out = score_texts(
            &[rec("1", "ja", "こんにちは")],
            &translator,
            &scorer,
            &ScoringOptions::default(),
        )
        .unwrap();
        assert!(out.scores[0].translated);
        assert_eq!(out.scores[0].scored_text, "EN:こんにちは");
        assert_eq!(translator.0.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn outage_for_one_record_is_recorded_not_defaulted() {
        let scorer = MapScorer(HashMap::from([
            ("a".to_string(), Ok(0.1)),
            (
                "b".to_string(),
                Err(ServiceError::Unavailable {
                    service: "perspective".into(),
                    reason: "503".into(),
                }),
            ),
            ("c".to_string(), Ok(0.7)),
        ]));
        let records = [rec("1", "en", "a"), rec("2", "en", "b"), rec("3", "en-GB", "c")];
        let out =
            score_texts(&records, &UpperTranslator::default(), &scorer, &ScoringOptions::default())
                .unwrap();
        assert_eq!(out.scores.len(), 2);
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.failures[0].tweet_id, "2");
        assert_eq!(out.scores[1].tweet_id, "3");
    }

    #[test]
    fn quota_aborts() {
        let scorer = MapScorer(HashMap::from([(
            "a".to_string(),
            Err(ServiceError::QuotaExceeded { service: "perspective".into() }),
        )]));
        let err = score_texts(
            &[rec("1", "en", "a")],
            &UpperTranslator::default(),
            &scorer,
            &ScoringOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, ExplicitError::QuotaExceeded { .. }));
    }

    #[test]
    fn translation_rule() {
        let o = ScoringOptions::default();
        assert!(!o.needs_translation("en"));
        assert!(!o.needs_translation("EN-us"));
        assert!(o.needs_translation("eng"));
        assert!(o.needs_translation("ja"));
        assert!(o.needs_translation("und"));
    }
}
