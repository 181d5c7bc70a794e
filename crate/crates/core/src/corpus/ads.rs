use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::TweetRecord;

/// Posting-source labels assigned by the platform's advertising tools.
pub const DEFAULT_AD_SOURCES: [&str; 5] = [
    "Twitter Ads",
    "Twitter for Advertisers",
    "Twitter for Advertisers (legacy)",
    "simpleads-ui",
    "advertiser-interface",
];

/// Set of source labels that mark a tweet as an ad.
///
/// Matching is exact on the raw source string. Advertisers posting through a
/// custom application are invisible to this check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AdSourceSet {
    sources: BTreeSet<String>,
}

impl Default for AdSourceSet {
    fn default() -> Self {
        Self::new(DEFAULT_AD_SOURCES)
    }
}

impl AdSourceSet {
    pub fn new<I, S>(sources: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            sources: sources.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, source: &str) -> bool {
        self.sources.contains(source)
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.sources.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }
}

pub fn is_ad(record: &TweetRecord, ad_sources: &AdSourceSet) -> bool {
    ad_sources.contains(&record.source)
}

/// Keeps ad records, preserving input order.
pub fn filter_ads(records: &[TweetRecord], ad_sources: &AdSourceSet) -> Vec<TweetRecord> {
    records
        .iter()
        .filter(|r| is_ad(r, ad_sources))
        .cloned()
        .collect()
}
