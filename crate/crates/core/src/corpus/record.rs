use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use url::Url;

/// Kind of media attached to a tweet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaKind {
    #[serde(alias = "photo")]
    Image,
    #[serde(alias = "animated_gif")]
    Video,
    None,
}

/// One captured tweet observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub author_id: String,
    #[serde(default)]
    pub username: String,
    pub created_at: DateTime<Utc>,
    /// When this observation was captured.
    pub captured_at: DateTime<Utc>,
    #[serde(default = "undetermined_lang")]
    pub lang: String,
    pub text: String,
    /// Posting application label, compared verbatim.
    pub source: String,
    #[serde(default)]
    pub embedded_urls: Vec<String>,
    #[serde(default)]
    pub media_kinds: Vec<MediaKind>,
    #[serde(default)]
    pub follower_count: u64,
    #[serde(default)]
    pub following_count: u64,
    #[serde(default)]
    pub account_created_at: Option<DateTime<Utc>>,
}

pub(crate) fn undetermined_lang() -> String {
    "und".to_string()
}

impl TweetRecord {
    /// Minimal record used throughout the tests and fixture generators.
    pub fn new(
        tweet_id: impl Into<String>,
        author_id: impl Into<String>,
        created_at: DateTime<Utc>,
        source: impl Into<String>,
        text: impl Into<String>,
    ) -> Self {
        Self {
            tweet_id: tweet_id.into(),
            author_id: author_id.into(),
            username: String::new(),
            created_at,
            captured_at: created_at,
            lang: undetermined_lang(),
            text: text.into(),
            source: source.into(),
            embedded_urls: Vec::new(),
            media_kinds: Vec::new(),
            follower_count: 0,
            following_count: 0,
            account_created_at: None,
        }
    }
}

/// Absolute `http`/`https` URL with a host.
pub fn is_valid_embedded_url(raw: &str) -> bool {
    match Url::parse(raw) {
        Ok(url) => matches!(url.scheme(), "http" | "https") && url.host().is_some(),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn url_validity() {
        assert!(is_valid_embedded_url("https://t.co/abc"));
        assert!(is_valid_embedded_url("http://example.com/a?utm_source=x"));
        assert!(!is_valid_embedded_url("ftp://example.com/file"));
        assert!(!is_valid_embedded_url("javascript:alert(1)"));
        assert!(!is_valid_embedded_url("/relative/path"));
        assert!(!is_valid_embedded_url("not a url"));
    }

    #[test]
    fn media_aliases() {
        let kinds: Vec<MediaKind> =
            serde_json::from_str(r#"["photo","animated_gif","video","none","image"]"#).unwrap();
        assert_eq!(
            kinds,
            vec![
                MediaKind::Image,
                MediaKind::Video,
                MediaKind::Video,
                MediaKind::None,
                MediaKind::Image
            ]
        );
    }
}
