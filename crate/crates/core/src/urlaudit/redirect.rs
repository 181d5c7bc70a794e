use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use url::Url;

use crate::services::{FetchError, IsolatedFetcher};

pub const DEFAULT_MAX_HOPS: usize = 10;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// One followed redirect: the URL it pointed to and the status of the
/// response that issued it (200 for a meta refresh).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub url: String,
    pub status: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// A non-redirecting 2xx response was reached.
    Final200,
    /// `max_hops` redirects were followed and the next response redirected again.
    MaxHops,
    Timeout,
    /// Network failure, unusable redirect target or a 4xx/5xx final response.
    FetchError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedirectChain {
    pub embedded_url: String,
    /// Redirects in order. `hops[0].url` is the target of the embedded URL's
    /// redirect, `hops[i].url` the target of `hops[i-1].url`'s redirect.
    pub hops: Vec<Hop>,
    /// Last URL reached: the last hop's URL, or the embedded URL when nothing
    /// redirected.
    pub landing_url: String,
    pub hop_count: usize,
    pub terminated_by: Termination,
    /// Status of the last response received, if any.
    pub final_status: Option<u16>,
    pub error: Option<String>,
}

fn meta_refresh_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r#"(?is)<meta[^>]*http-equiv\s*=\s*["']?refresh["']?[^>]*content\s*=\s*["']\s*\d*\s*;?\s*url\s*=\s*['"]?([^"'>\s]+)"#,
        )
        .expect("static regex")
    })
}

/// Target of an HTML `<meta http-equiv="refresh">`, if present.
pub(crate) fn meta_refresh_target(body: &str) -> Option<&str> {
    meta_refresh_regex()
        .captures(body)
        .and_then(|c| c.get(1))
        .map(|m| m.as_str())
}

/// Follows HTTP 3xx `Location` headers and HTML meta refreshes.
///
/// Failures are reported through `terminated_by`; this never errors.
pub fn resolve_redirects(
    embedded_url: &str,
    fetcher: &dyn IsolatedFetcher,
    max_hops: usize,
    timeout: Duration,
) -> RedirectChain {
    let mut chain = RedirectChain {
        embedded_url: embedded_url.to_string(),
        hops: Vec::new(),
        landing_url: embedded_url.to_string(),
        hop_count: 0,
        terminated_by: Termination::FetchError,
        final_status: None,
        error: None,
    };
    let mut current = match Url::parse(embedded_url) {
        Ok(u) => u,
        Err(e) => {
            chain.error = Some(format!("unparseable URL: {e}"));
            return chain;
        }
    };

    loop {
        let response = match fetcher.fetch(&current, timeout) {
            Ok(r) => r,
            Err(FetchError::Timeout) => {
                chain.terminated_by = Termination::Timeout;
                break;
            }
            Err(FetchError::Failed(reason)) => {
                chain.terminated_by = Termination::FetchError;
                chain.error = Some(reason);
                break;
            }
        };
        chain.final_status = Some(response.status);

        let target = if (300..400).contains(&response.status) {
            match response.location.as_deref() {
                Some(loc) => Some(loc),
                None => {
                    chain.terminated_by = Termination::FetchError;
                    chain.error = Some(format!("HTTP {} without Location", response.status));
                    break;
                }
            }
        } else if (200..300).contains(&response.status) {
            response.body.as_deref().and_then(meta_refresh_target)
        } else {
            chain.terminated_by = Termination::FetchError;
            chain.error = Some(format!("HTTP {}", response.status));
            break;
        };

        let Some(target) = target else {
            chain.terminated_by = Termination::Final200;
            break;
        };
        if chain.hops.len() == max_hops {
            chain.terminated_by = Termination::MaxHops;
            break;
        }
        let next = match current.join(target) {
            Ok(u) => u,
            Err(e) => {
                chain.terminated_by = Termination::FetchError;
                chain.error = Some(format!("bad redirect target `{target}`: {e}"));
                break;
            }
        };
        chain.hops.push(Hop {
            url: next.to_string(),
            status: response.status,
        });
        current = next;
    }

    chain.hop_count = chain.hops.len();
    if let Some(last) = chain.hops.last() {
        chain.landing_url = last.url.clone();
    }
    chain
}
