use std::collections::HashMap;
use std::io::Read;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use super::Cassette;
use crate::urlaudit::canonical_url;

const MAX_BODY_BYTES: u64 = 64 * 1024;

/// One HTTP exchange as seen by the redirect resolver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchResponse {
    pub status: u16,
    pub location: Option<String>,
    /// Leading part of an HTML body, used for meta-refresh detection.
    pub body: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FetchError {
    #[error("timed out")]
    Timeout,
    #[error("fetch failed: {0}")]
    Failed(String),
}

/// Fetches a single URL without following redirects.
///
/// Implementations must run in an isolated environment (fresh profile, no
/// shared cookies) and must send the URL verbatim, query string included.
pub trait IsolatedFetcher: Send + Sync {
    fn fetch(&self, url: &Url, timeout: Duration) -> Result<FetchResponse, FetchError>;
}

/// Plain HTTP fetcher with a per-host politeness delay. Every request uses a
/// fresh client, so no cookies or connections carry over between URLs.
pub struct HttpFetcher {
    politeness: Duration,
    last_by_host: Mutex<HashMap<String, Instant>>,
    user_agent: String,
}

impl Default for HttpFetcher {
    fn default() -> Self {
        Self::new(Duration::ZERO)
    }
}

impl HttpFetcher {
    pub fn new(politeness: Duration) -> Self {
        Self {
            politeness,
            last_by_host: Mutex::new(HashMap::new()),
            user_agent: "Mozilla/5.0 (X11; Linux x86_64; rv:109.0) Gecko/20100101 Firefox/115.0"
                .to_string(),
        }
    }

    fn pace(&self, host: &str) {
        if self.politeness.is_zero() {
            return;
        }
        let wait = {
            let mut last = self.last_by_host.lock().unwrap_or_else(|p| p.into_inner());
            let now = Instant::now();
            let next = last
                .get(host)
                .map(|&prev| prev + self.politeness)
                .unwrap_or(now)
                .max(now);
            last.insert(host.to_string(), next);
            next - now
        };
        thread::sleep(wait);
    }
}

impl IsolatedFetcher for HttpFetcher {
    fn fetch(&self, url: &Url, timeout: Duration) -> Result<FetchResponse, FetchError> {
        self.pace(url.host_str().unwrap_or_default());
        let client = reqwest::blocking::Client::builder()
            .redirect(reqwest::redirect::Policy::none())
            .timeout(timeout)
            .user_agent(self.user_agent.as_str())
            .build()
            .map_err(|e| FetchError::Failed(e.to_string()))?;
        let response = client.get(url.as_str()).send().map_err(|e| {
            if e.is_timeout() {
                FetchError::Timeout
            } else {
                FetchError::Failed(e.to_string())
            }
        })?;
        let status = response.status().as_u16();
        let location = response
            .headers()
            .get(reqwest::header::LOCATION)
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        let is_html = response
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .is_some_and(|ct| ct.contains("html"));
        let body = if is_html {
            let mut buf = Vec::new();
            response
                .take(MAX_BODY_BYTES)
                .read_to_end(&mut buf)
                .map_err(|e| FetchError::Failed(e.to_string()))?;
            Some(String::from_utf8_lossy(&buf).into_owned())
        } else {
            None
        };
        Ok(FetchResponse {
            status,
            location,
            body,
        })
    }
}

const FETCH_SERVICE: &str = "fetch";

#[derive(Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
enum RecordedFetch {
    Response(FetchResponse),
    Timeout,
    Failed { reason: String },
}

fn key_for(url: &Url) -> String {
    canonical_url(url.as_str()).unwrap_or_else(|| url.to_string())
}

/// Replays recorded fetches keyed by canonical URL.
pub struct CassetteFetcher {
    cassette: Cassette,
}

impl CassetteFetcher {
    pub fn new(cassette: Cassette) -> Self {
        Self { cassette }
    }

    /// Records a response, for building cassettes by hand.
    pub fn record(&self, url: &Url, response: Result<FetchResponse, FetchError>) -> std::io::Result<()> {
        let recorded = match response {
            Ok(r) => RecordedFetch::Response(r),
            Err(FetchError::Timeout) => RecordedFetch::Timeout,
            Err(FetchError::Failed(reason)) => RecordedFetch::Failed { reason },
        };
        let value = serde_json::to_value(recorded).unwrap_or(serde_json::Value::Null);
        self.cassette
            .put(FETCH_SERVICE, &key_for(url), &value)
            .map_err(|e| std::io::Error::other(e.to_string()))
    }
}

impl IsolatedFetcher for CassetteFetcher {
    fn fetch(&self, url: &Url, _timeout: Duration) -> Result<FetchResponse, FetchError> {
        let key = key_for(url);
        let value = self
            .cassette
            .get(FETCH_SERVICE, &key)
            .map_err(|e| FetchError::Failed(e.to_string()))?
            .ok_or_else(|| FetchError::Failed(format!("cassette miss for {key}")))?;
        match serde_json::from_value(value).map_err(|e| FetchError::Failed(e.to_string()))? {
            RecordedFetch::Response(r) => Ok(r),
            RecordedFetch::Timeout => Err(FetchError::Timeout),
            RecordedFetch::Failed { reason } => Err(FetchError::Failed(reason)),
        }
    }
}

/// Fetches live and records every outcome into a cassette.
pub struct RecordingFetcher<F> {
    inner: F,
    recorder: CassetteFetcher,
}

impl<F: IsolatedFetcher> RecordingFetcher<F> {
    pub fn new(inner: F, cassette: Cassette) -> Self {
        Self {
            inner,
            recorder: CassetteFetcher::new(cassette),
        }
    }
}

impl<F: IsolatedFetcher> IsolatedFetcher for RecordingFetcher<F> {
    fn fetch(&self, url: &Url, timeout: Duration) -> Result<FetchResponse, FetchError> {
        let outcome = self.inner.fetch(url, timeout);
        if let Err(e) = self.recorder.record(url, outcome.clone()) {
            log::warn!("could not record fetch of {url}: {e}");
        }
        outcome
    }
}
