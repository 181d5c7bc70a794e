//! Core library for auditing ad moderation on a social platform.
//!
//! The pipeline runs in stages, each backed by one module:
//!
//! - [`corpus`]: parse line-delimited tweet records, identify ads by posting
//!   source and persist immutable capture snapshots.
//! - [`moderation`]: diff initial and rehydrated snapshots, daily removal
//!   series and advertiser account analytics.
//! - [`explicit`]: explicitness scoring through pluggable services, threshold
//!   calibration and per-language moderation disparity.
//! - [`clusterlab`]: embeddings, seeded dimensionality reduction, HDBSCAN grid
//!   search gated by DBCV, run selection, Louvain communities and blind
//!   validation sampling.
//! - [`urlaudit`]: redirect-chain resolution, URL reputation and the
//!   problematic-URL score.
//! - [`annotate`]: annotation sessions and inter-annotator agreement.
//! - [`report`]: headline compliance arithmetic and figure datasets.
//!
//! External services (explicitness scoring, translation, embeddings, URL
//! reputation, page fetching) sit behind traits in [`services`] and can be
//! replayed offline from cassette directories.

pub mod annotate;
pub mod clusterlab;
pub mod config;
pub mod corpus;
pub mod explicit;
pub mod moderation;
pub mod report;
pub mod services;
pub mod urlaudit;

mod hashing;

pub use hashing::{sha256_hex, stable_seed};
