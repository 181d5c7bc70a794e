use std::collections::HashSet;

use url::Url;

use crate::corpus::TweetRecord;

/// Canonical form used as the reputation and fetch cassette key: parsed and
/// re-serialised (scheme and host lowercased, default port dropped), fragment
/// removed, query string kept as is. `None` for unparseable input.
pub fn canonical_url(raw: &str) -> Option<String> {
    let mut url = Url::parse(raw.trim()).ok()?;
    url.set_fragment(None);
    Some(url.to_string())
}

/// Embedded URLs with duplicates removed, first occurrence kept.
pub fn extract_embedded_urls(record: &TweetRecord) -> Vec<String> {
    let mut seen = HashSet::new();
    record
        .embedded_urls
        .iter()
        .filter(|u| seen.insert(u.as_str()))
        .cloned()
        .collect()
}
