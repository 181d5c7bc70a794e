//! Clustering of violating ads: embeddings, seeded dimensionality reduction,
//! an HDBSCAN grid gated by DBCV, run selection, Louvain communities over
//! cluster centroids, blind-validation sampling and the template detector.

mod blind;
mod dbcv;
mod distance;
mod embed;
mod grid;
mod hdbscan;
mod louvain;
mod template;
mod umap;

pub use blind::{blind_validation_sample, BlindItem, Stratum};
pub use dbcv::{dbcv_score, dbcv_score_with_metric, dbcv_with_distances};
pub use distance::{pairwise_distances, Metric};
pub use embed::{embed_texts, EmbeddingMatrix};
pub use grid::{
    default_grid, grid_search_clusters, select_best_run, ClusterRun, GridFailure, GridOutcome,
    DEFAULT_DBCV_FLOOR,
};
pub use hdbscan::{hdbscan, hdbscan_with_distances, ClusterParams, SelectionMethod};
pub use louvain::{cluster_communities, modularity, CommunityAssignment};
pub use template::{detect_template_pattern, AdultLexicon, TemplateMatches, DEFAULT_LEXICON};
pub use umap::{reduce_dimensions, UmapOptions};

use thiserror::Error;

use crate::services::ServiceError;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("embedding for {tweet_id} has {got} dimensions, expected {expected}")]
    DimensionMismatch {
        tweet_id: String,
        expected: usize,
        got: usize,
    },
    #[error("embedding for {0} contains non-finite values")]
    NonFinite(String),
    #[error("{got} points is fewer than the neighbourhood size {needed}")]
    TooFewPoints { got: usize, needed: usize },
    #[error("target dimension {target} must be below the input dimension {dim}")]
    InvalidTargetDim { target: usize, dim: usize },
    #[error("invalid cluster parameters: {0}")]
    InvalidParams(String),
    #[error("{labels} labels for {points} points")]
    LabelCountMismatch { labels: usize, points: usize },
    #[error("DBCV undefined: {0}")]
    DbcvUndefined(String),
    #[error("no run reaches the DBCV floor")]
    NoSurvivingRuns,
    #[error("no runs in the requested stratum")]
    EmptyStratum,
    #[error("sample of {n} cannot cover {clusters} clusters")]
    SampleTooSmall { n: usize, clusters: usize },
}
