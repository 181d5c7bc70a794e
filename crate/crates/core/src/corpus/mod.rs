//! Tweet records, ad identification and capture snapshots.

mod ads;
mod parse;
mod record;
mod store;

pub use ads::{filter_ads, is_ad, AdSourceSet, DEFAULT_AD_SOURCES};
pub use parse::{parse_tweet_stream, write_tweet_stream, ParseError, ParseStats, Strictness};
pub use record::{is_valid_embedded_url, MediaKind, TweetRecord};
pub use store::{CorpusStore, StoreError, WriteReceipt, INITIAL_LABEL, REHYDRATED_LABEL};
