//! Append-only snapshot store.
//!
//! Layout of a store directory:
//!
//! ```text
//! <dir>/index.json            snapshot list: label, file, finalized, record count
//! <dir>/<label>-<hash8>.jsonl one TweetRecord per line, append-only
//! ```
//!
//! `<label>` is the snapshot label with every character outside
//! `[A-Za-z0-9_-]` replaced by `_`; `<hash8>` is the first eight hex digits of
//! the SHA-256 of the raw label, so distinct labels never share a file.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::parse::{parse_tweet_stream, Strictness};
use super::TweetRecord;
use crate::sha256_hex;

pub const INITIAL_LABEL: &str = "initial";
pub const REHYDRATED_LABEL: &str = "rehydrated";

const INDEX_FILE: &str = "index.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("snapshot `{0}` is finalized")]
    SnapshotFinalized(String),
    #[error("unknown snapshot `{0}`")]
    UnknownSnapshot(String),
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteReceipt {
    pub written: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SnapshotEntry {
    label: String,
    file: String,
    finalized: bool,
    records: usize,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Index {
    snapshots: Vec<SnapshotEntry>,
}

/// Directory-backed collection of snapshots keyed by `(tweet_id, label)`.
///
/// One writer per label. Readers may open the store concurrently once a
/// label is finalized.
#[derive(Debug)]
pub struct CorpusStore {
    dir: PathBuf,
    index: Index,
    keys: BTreeMap<String, HashSet<String>>,
}

fn file_name_for(label: &str) -> String {
    let sanitized: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{sanitized}-{}.jsonl", &sha256_hex(label)[..8])
}

impl CorpusStore {
    /// Opens (or creates) a store rooted at `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let index_path = dir.join(INDEX_FILE);
        let index: Index = if index_path.exists() {
            serde_json::from_reader(BufReader::new(File::open(&index_path)?))?
        } else {
            Index::default()
        };
        let mut store = Self {
            dir,
            index,
            keys: BTreeMap::new(),
        };
        for entry in store.index.snapshots.clone() {
            let records = store.read_file(&entry.file)?;
            if records.len() != entry.records {
                return Err(StoreError::Corrupt(format!(
                    "snapshot `{}` lists {} records but file holds {}",
                    entry.label,
                    entry.records,
                    records.len()
                )));
            }
            store.keys.insert(
                entry.label.clone(),
                records.into_iter().map(|r| r.tweet_id).collect(),
            );
        }
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Labels in creation order.
    pub fn snapshot_labels(&self) -> Vec<&str> {
        self.index.snapshots.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn is_finalized(&self, label: &str) -> bool {
        self.entry(label).is_some_and(|e| e.finalized)
    }

    fn entry(&self, label: &str) -> Option<&SnapshotEntry> {
        self.index.snapshots.iter().find(|s| s.label == label)
    }

    /// Appends records under `label`. Keys already present are counted as
    /// duplicates and skipped.
    pub fn store_snapshot(
        &mut self,
        label: &str,
        records: &[TweetRecord],
    ) -> Result<WriteReceipt, StoreError> {
        if self.is_finalized(label) {
            return Err(StoreError::SnapshotFinalized(label.to_string()));
        }
        if self.entry(label).is_none() {
            self.index.snapshots.push(SnapshotEntry {
                label: label.to_string(),
                file: file_name_for(label),
                finalized: false,
                records: 0,
            });
        }
        let file = self.entry(label).map(|e| e.file.clone()).unwrap_or_default();
        let keys = self.keys.entry(label.to_string()).or_default();

        let mut buf = Vec::new();
        let mut receipt = WriteReceipt {
            written: 0,
            duplicates: 0,
        };
        for record in records {
            if keys.insert(record.tweet_id.clone()) {
                serde_json::to_writer(&mut buf, record)?;
                buf.push(b'\n');
                receipt.written += 1;
            } else {
                receipt.duplicates += 1;
            }
        }
        let mut out = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.dir.join(&file))?;
        out.write_all(&buf)?;
        out.sync_all()?;

        if let Some(entry) = self.index.snapshots.iter_mut().find(|s| s.label == label) {
            entry.records += receipt.written;
        }
        self.write_index()?;
        Ok(receipt)
    }

    /// Marks a snapshot read-only.
    pub fn finalize(&mut self, label: &str) -> Result<(), StoreError> {
        let entry = self
            .index
            .snapshots
            .iter_mut()
            .find(|s| s.label == label)
            .ok_or_else(|| StoreError::UnknownSnapshot(label.to_string()))?;
        entry.finalized = true;
        self.write_index()
    }

    /// Records of a snapshot ordered by `(captured_at, tweet_id)`.
    pub fn records(&self, label: &str) -> Result<Vec<TweetRecord>, StoreError> {
        let entry = self
            .entry(label)
            .ok_or_else(|| StoreError::UnknownSnapshot(label.to_string()))?;
        let mut records = self.read_file(&entry.file)?;
        records.sort_by(|a, b| {
            a.captured_at
                .cmp(&b.captured_at)
                .then_with(|| a.tweet_id.cmp(&b.tweet_id))
        });
        Ok(records)
    }

    fn read_file(&self, file: &str) -> Result<Vec<TweetRecord>, StoreError> {
        let path = self.dir.join(file);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let (records, _) = parse_tweet_stream(BufReader::new(File::open(path)?), Strictness::Strict)
            .map_err(|e| StoreError::Corrupt(e.to_string()))?;
        Ok(records)
    }

    fn write_index(&self) -> Result<(), StoreError> {
        let tmp = self.dir.join(format!("{INDEX_FILE}.tmp"));
        let mut out = File::create(&tmp)?;
        serde_json::to_writer_pretty(&mut out, &self.index)?;
        out.write_all(b"\n")?;
        out.sync_all()?;
        fs::rename(tmp, self.dir.join(INDEX_FILE))?;
        Ok(())
    }
}
