use std::collections::{BTreeSet, HashMap};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    canonical_url, extract_embedded_urls, resolve_redirects, score_tweet_urls, RedirectChain,
    UrlCounts, UrlVerdict, DEFAULT_MAX_HOPS, DEFAULT_TIMEOUT, DEFAULT_URL_THRESHOLD,
};
use crate::corpus::TweetRecord;
use crate::services::{IsolatedFetcher, Reputation, ReputationClient};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrlAuditConfig {
    pub max_hops: usize,
    pub timeout: Duration,
    pub threshold: u32,
    /// Size of the worker pool for fetches and lookups.
    pub workers: usize,
}

impl Default for UrlAuditConfig {
    fn default() -> Self {
        Self {
            max_hops: DEFAULT_MAX_HOPS,
            timeout: DEFAULT_TIMEOUT,
            threshold: DEFAULT_URL_THRESHOLD,
            workers: 4,
        }
    }
}

/// Everything learned about one distinct embedded URL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrlLookup {
    pub url: String,
    pub chain: RedirectChain,
    pub embedded: Option<Reputation>,
    pub landing: Option<Reputation>,
    pub error: Option<String>,
}

impl UrlLookup {
    pub fn counts(&self) -> Option<UrlCounts> {
        let (e, l) = (self.embedded?, self.landing?);
        Some(UrlCounts::new(e.malicious, e.suspicious, l.malicious, l.suspicious))
    }

    /// True when either end was never analysed by the reputation service.
    pub fn unscanned(&self) -> bool {
        [self.embedded, self.landing]
            .iter()
            .flatten()
            .any(|r| !r.scanned)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrlAuditOutcome {
    /// One entry per distinct canonical URL, sorted by URL.
    pub lookups: Vec<UrlLookup>,
    /// One verdict per record that has at least one URL, in record order.
    pub verdicts: Vec<UrlVerdict>,
    /// Counts of every successfully scored URL, per tweet.
    pub per_tweet: Vec<(String, Vec<UrlCounts>)>,
    pub failed_lookups: usize,
    pub unscanned_lookups: usize,
}

fn lookup_one(
    url: &str,
    fetcher: &dyn IsolatedFetcher,
    reputation: &dyn ReputationClient,
    cfg: &UrlAuditConfig,
) -> UrlLookup {
    let chain = resolve_redirects(url, fetcher, cfg.max_hops, cfg.timeout);
    let embedded = reputation.lookup(url);
    let landing = if chain.landing_url == url {
        embedded.clone()
    } else {
        reputation.lookup(&chain.landing_url)
    };
    let error = [&embedded, &landing]
        .iter()
        .find_map(|r| r.as_ref().err().map(|e| e.to_string()));
    UrlLookup {
        url: url.to_string(),
        chain,
        embedded: embedded.ok(),
        landing: landing.ok(),
        error,
    }
}

/// Resolves, looks up and scores every distinct embedded URL of `records`.
///
/// URLs are deduplicated by canonical form before any network work and the
/// results joined back per tweet. Lookups whose reputation query failed are
/// left out of the tweet's score and counted in `failed_lookups`.
pub fn audit_urls(
    records: &[TweetRecord],
    fetcher: &dyn IsolatedFetcher,
    reputation: &dyn ReputationClient,
    cfg: &UrlAuditConfig,
) -> UrlAuditOutcome {
    let per_record: Vec<(String, Vec<String>)> = records
        .iter()
        .map(|r| {
            let urls = extract_embedded_urls(r)
                .iter()
                .filter_map(|u| canonical_url(u))
                .collect::<Vec<_>>();
            (r.tweet_id.clone(), urls)
        })
        .filter(|(_, urls)| !urls.is_empty())
        .collect();
    let distinct: BTreeSet<&str> = per_record
        .iter()
        .flat_map(|(_, urls)| urls.iter().map(String::as_str))
        .collect();
    let distinct: Vec<&str> = distinct.into_iter().collect();

    let run = || -> Vec<UrlLookup> {
        distinct
            .par_iter()
            .map(|url| lookup_one(url, fetcher, reputation, cfg))
            .collect()
    };
    let lookups = match rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(e) => {
            log::warn!("falling back to the global pool: {e}");
            run()
        }
    };

    let by_url: HashMap<&str, &UrlLookup> = lookups.iter().map(|l| (l.url.as_str(), l)).collect();
    let mut verdicts = Vec::with_capacity(per_record.len());
    let mut per_tweet = Vec::with_capacity(per_record.len());
    for (tweet_id, urls) in &per_record {
        let mut seen = BTreeSet::new();
        let counts: Vec<UrlCounts> = urls
            .iter()
            .filter(|u| seen.insert(u.as_str()))
            .filter_map(|u| by_url.get(u.as_str()).and_then(|l| l.counts()))
            .collect();
        verdicts.push(score_tweet_urls(tweet_id, &counts, cfg.threshold));
        per_tweet.push((tweet_id.clone(), counts));
    }
    UrlAuditOutcome {
        failed_lookups: lookups.iter().filter(|l| l.error.is_some()).count(),
        unscanned_lookups: lookups.iter().filter(|l| l.unscanned()).count(),
        lookups,
        verdicts,
        per_tweet,
    }
}
