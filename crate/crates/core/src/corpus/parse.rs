use std::io::{BufRead, Write};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::record::{is_valid_embedded_url, undetermined_lang, MediaKind, TweetRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    Strict,
    #[default]
    Lenient,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseStats {
    /// Non-blank lines seen.
    pub total: usize,
    pub parsed: usize,
    pub dropped: usize,
    /// Embedded URL entries removed because they were not absolute http(s) URLs.
    pub dropped_urls: usize,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed record on line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("failed to read tweet stream: {0}")]
    Io(#[from] std::io::Error),
}

/// Wire shape of a stream line. Everything is optional so that missing
/// required fields can be reported by name.
#[derive(Deserialize)]
struct RawRecord {
    tweet_id: Option<String>,
    author_id: Option<String>,
    username: Option<String>,
    created_at: Option<DateTime<Utc>>,
    captured_at: Option<DateTime<Utc>>,
    lang: Option<String>,
    text: Option<String>,
    source: Option<String>,
    #[serde(default)]
    embedded_urls: Vec<String>,
    #[serde(default)]
    media_kinds: Vec<MediaKind>,
    follower_count: Option<u64>,
    following_count: Option<u64>,
    account_created_at: Option<DateTime<Utc>>,
}

fn required<T>(value: Option<T>, name: &str) -> Result<T, String> {
    value.ok_or_else(|| format!("missing field `{name}`"))
}

fn non_empty(value: String, name: &str) -> Result<String, String> {
    if value.is_empty() {
        Err(format!("field `{name}` is empty"))
    } else {
        Ok(value)
    }
}

fn convert(raw: RawRecord, dropped_urls: &mut usize) -> Result<TweetRecord, String> {
    let tweet_id = non_empty(required(raw.tweet_id, "tweet_id")?, "tweet_id")?;
    let author_id = non_empty(required(raw.author_id, "author_id")?, "author_id")?;
    let created_at = required(raw.created_at, "created_at")?;
    let source = required(raw.source, "source")?;
    let text = required(raw.text, "text")?;
    let captured_at = raw.captured_at.unwrap_or(created_at);
    if captured_at < created_at {
        return Err(format!(
            "captured_at {captured_at} precedes created_at {created_at}"
        ));
    }
    let before = raw.embedded_urls.len();
    let embedded_urls: Vec<String> = raw
        .embedded_urls
        .into_iter()
        .filter(|u| is_valid_embedded_url(u))
        .collect();
    *dropped_urls += before - embedded_urls.len();

    Ok(TweetRecord {
        tweet_id,
        author_id,
        username: raw.username.unwrap_or_default(),
        created_at,
        captured_at,
        lang: raw.lang.unwrap_or_else(undetermined_lang),
        text,
        source,
        embedded_urls,
        media_kinds: raw.media_kinds,
        follower_count: raw.follower_count.unwrap_or(0),
        following_count: raw.following_count.unwrap_or(0),
        account_created_at: raw.account_created_at,
    })
}

/// Parses newline-delimited JSON tweet records.
///
/// Blank lines are skipped and not counted. Unknown fields are ignored.
/// Invalid embedded URLs are dropped (and counted) in both modes; a line that
/// cannot become a record is an error in strict mode and is skipped in
/// lenient mode.
pub fn parse_tweet_stream<R: BufRead>(
    reader: R,
    strictness: Strictness,
) -> Result<(Vec<TweetRecord>, ParseStats), ParseError> {
    let mut stats = ParseStats::default();
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        stats.total += 1;
        let mut dropped_urls = 0;
        let outcome = serde_json::from_str::<RawRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|raw| convert(raw, &mut dropped_urls));
        match outcome {
            Ok(record) => {
                stats.parsed += 1;
                stats.dropped_urls += dropped_urls;
                records.push(record);
            }
            Err(reason) => match strictness {
                Strictness::Strict => {
                    return Err(ParseError::MalformedRecord {
                        line: idx + 1,
                        reason,
                    })
                }
                Strictness::Lenient => {
                    log::debug!("dropping line {}: {reason}", idx + 1);
                    stats.dropped += 1;
                }
            },
        }
    }
    Ok((records, stats))
}

/// Writes records one JSON object per line.
pub fn write_tweet_stream<W: Write>(records: &[TweetRecord], mut writer: W) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
