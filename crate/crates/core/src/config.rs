//! Pipeline configuration with the published defaults.
//!
//! The structure mirrors a declarative file with one table per stage. Every
//! field has a default, so an empty document is a valid configuration apart
//! from input paths.

use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clusterlab::{ClusterParams, Metric, SelectionMethod, DEFAULT_DBCV_FLOOR};
use crate::corpus::{AdSourceSet, Strictness};
use crate::explicit::DEFAULT_EXPLICIT_THRESHOLD;
use crate::services::SEXUALLY_EXPLICIT;
use crate::urlaudit::{DEFAULT_MAX_HOPS, DEFAULT_URL_THRESHOLD};

#[derive(Debug, Error, PartialEq)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub run: RunConfig,
    pub inputs: InputConfig,
    pub corpus: CorpusConfig,
    pub moderation: ModerationConfig,
    pub explicit: ExplicitConfig,
    pub cluster: ClusterConfig,
    pub urls: UrlConfig,
    pub annotate: AnnotateConfig,
    pub services: ServicesConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Parent of the content-addressed run directories.
    pub out_dir: PathBuf,
    /// Base seed; each stage derives its own from it.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("runs"),
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// Line-delimited records captured from the stream.
    pub initial: PathBuf,
    /// Line-delimited records returned by rehydration.
    pub rehydrated: PathBuf,
    /// Per-annotator adult labels for the calibration sample (CSV:
    /// tweet_id, annotator, label).
    pub calibration_labels: Option<PathBuf>,
    /// Manually confirmed false positives, one tweet id per line.
    pub false_positives: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub ad_sources: AdSourceSet,
    pub strictness: Strictness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModerationConfig {
    pub rehydration_window_days: i64,
    /// Start of ad collection; defaults to the earliest captured ad.
    pub collection_start: Option<DateTime<Utc>>,
    /// Removals confirmed after the rehydration snapshot.
    pub late_removal_adjustment: u64,
}

impl Default for ModerationConfig {
    fn default() -> Self {
        Self {
            rehydration_window_days: 14,
            collection_start: None,
            late_removal_adjustment: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplicitConfig {
    pub threshold: f64,
    pub attribute: String,
    pub untranslated_langs: Vec<String>,
    pub calibration_per_bin: usize,
    pub calibration_bin_width: f64,
    /// Step of the exported score CDF.
    pub cdf_step: f64,
}

impl Default for ExplicitConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_EXPLICIT_THRESHOLD,
            attribute: SEXUALLY_EXPLICIT.to_string(),
            untranslated_langs: vec!["en".to_string()],
            calibration_per_bin: 50,
            calibration_bin_width: 0.1,
            cdf_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Inclusive bounds.
    pub min_cluster_size: [usize; 2],
    pub min_samples: [usize; 2],
    pub metrics: Vec<Metric>,
    pub selection_methods: Vec<SelectionMethod>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            min_cluster_size: [2, 15],
            min_samples: [1, 10],
            metrics: vec![Metric::Euclidean, Metric::Manhattan],
            selection_methods: vec![SelectionMethod::Eom, SelectionMethod::Leaf],
        }
    }
}

impl GridConfig {
    /// Every combination with `min_samples <= min_cluster_size`.
    pub fn params(&self) -> Vec<ClusterParams> {
        let mut grid = Vec::new();
        for min_cluster_size in self.min_cluster_size[0]..=self.min_cluster_size[1] {
            for min_samples in self.min_samples[0]..=self.min_samples[1].min(min_cluster_size) {
                for &metric in &self.metrics {
                    for &cluster_selection_method in &self.selection_methods {
                        grid.push(ClusterParams {
                            min_cluster_size,
                            min_samples,
                            metric,
                            cluster_selection_method,
                        });
                    }
                }
            }
        }
        grid
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub dbcv_floor: f64,
    pub reduced_dim: usize,
    pub umap_neighbors: usize,
    pub umap_epochs: usize,
    pub grid: GridConfig,
    /// Minimum centroid cosine similarity for an edge in the community graph.
    pub similarity_floor: f64,
    pub blind_sample_size: usize,
    /// Adult lexicon for the template detector; the bundled list if unset.
    pub lexicon: Option<PathBuf>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            dbcv_floor: DEFAULT_DBCV_FLOOR,
            reduced_dim: 128,
            umap_neighbors: 15,
            umap_epochs: 200,
            grid: GridConfig::default(),
            similarity_floor: 0.5,
            blind_sample_size: 100,
            lexicon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UrlConfig {
    pub threshold: u32,
    pub max_hops: usize,
    pub timeout_secs: u64,
    pub workers: usize,
    /// Thresholds for the sensitivity table.
    pub sensitivity_thresholds: Vec<u32>,
}

impl Default for UrlConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_URL_THRESHOLD,
            max_hops: DEFAULT_MAX_HOPS,
            timeout_secs: 30,
            workers: 4,
            sensitivity_thresholds: (1..=10).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotateConfig {
    pub annotators: Vec<String>,
    /// Ads per adult-binary annotation session.
    pub sample_size: usize,
    pub extra_landing_categories: Vec<String>,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        Self {
            annotators: ["a1", "a2", "a3", "a4"].map(String::from).to_vec(),
            sample_size: 200,
            extra_landing_categories: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Endpoint {
    pub url: String,
    /// Environment variable holding the credential, if the service needs one.
    pub key_env: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServicesConfig {
    /// Replay (and with `record`, capture) responses from this directory.
    pub cassette_dir: Option<PathBuf>,
    /// With a cassette directory: call live services on a miss and store
    /// the response.
    pub record: bool,
    pub perspective: Endpoint,
    pub translate: Endpoint,
    pub embed: Endpoint,
    pub reputation: Endpoint,
    /// Minimum spacing between requests to one service or host.
    pub politeness_ms: u64,
}

impl Default for ServicesConfig {
    fn default() -> Self {
        let endpoint = |url: &str, key: Option<&str>| Endpoint {
            url: url.to_string(),
            key_env: key.map(String::from),
        };
        Self {
            cassette_dir: None,
            record: false,
            perspective: endpoint("https://commentanalyzer.googleapis.com/", Some("PERSPECTIVE_API_KEY")),
            translate: endpoint("https://translation.googleapis.com/", Some("TRANSLATE_API_KEY")),
            embed: endpoint("http://127.0.0.1:8501/", None),
            reputation: endpoint("https://www.virustotal.com/", Some("VT_API_KEY")),
            politeness_ms: 1000,
        }
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError(msg()))
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let e = &self.explicit;
        ensure(e.threshold > 0.0 && e.threshold < 1.0, || {
            format!("explicit.threshold {} outside (0, 1)", e.threshold)
        })?;
        ensure(e.calibration_per_bin >= 1, || "explicit.calibration_per_bin must be >= 1".into())?;
        let bins = (1.0 / e.calibration_bin_width).round();
        ensure(
            e.calibration_bin_width > 0.0 && (bins * e.calibration_bin_width - 1.0).abs() < 1e-9,
            || format!("explicit.calibration_bin_width {} must divide 1", e.calibration_bin_width),
        )?;
        ensure(e.cdf_step > 0.0 && e.cdf_step < 1.0, || {
            format!("explicit.cdf_step {} outside (0, 1)", e.cdf_step)
        })?;
        ensure(!e.attribute.is_empty(), || "explicit.attribute is empty".into())?;

        ensure(self.moderation.rehydration_window_days > 0, || {
            "moderation.rehydration_window_days must be positive".into()
        })?;
        ensure(!self.corpus.ad_sources.is_empty(), || "corpus.ad_sources is empty".into())?;

        let c = &self.cluster;
        ensure(c.dbcv_floor >= -1.0, || format!("cluster.dbcv_floor {} below -1", c.dbcv_floor))?;
        ensure(c.reduced_dim >= 1, || "cluster.reduced_dim must be >= 1".into())?;
        ensure(c.umap_neighbors >= 2, || "cluster.umap_neighbors must be >= 2".into())?;
        let g = &c.grid;
        ensure(g.min_cluster_size[0] >= 2 && g.min_cluster_size[0] <= g.min_cluster_size[1], || {
            format!("cluster.grid.min_cluster_size {:?} invalid", g.min_cluster_size)
        })?;
        ensure(g.min_samples[0] >= 1 && g.min_samples[0] <= g.min_samples[1], || {
            format!("cluster.grid.min_samples {:?} invalid", g.min_samples)
        })?;
        ensure(!g.metrics.is_empty() && !g.selection_methods.is_empty(), || {
            "cluster.grid needs at least one metric and selection method".into()
        })?;
        ensure(!g.params().is_empty(), || "cluster.grid is empty".into())?;

        let u = &self.urls;
        ensure(u.threshold >= 1, || "urls.threshold must be >= 1".into())?;
        ensure(u.workers >= 1, || "urls.workers must be >= 1".into())?;
        ensure(u.timeout_secs >= 1, || "urls.timeout_secs must be >= 1".into())?;

        ensure(!self.annotate.annotators.is_empty(), || "annotate.annotators is empty".into())?;
        Ok(())
    }
}
