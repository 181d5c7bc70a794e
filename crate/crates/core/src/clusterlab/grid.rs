use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dbcv::dbcv_with_distances;
use super::hdbscan::{condense, linkage_for};
use super::{pairwise_distances, ClusterError, ClusterParams, EmbeddingMatrix, Metric, SelectionMethod};

pub const DEFAULT_DBCV_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRun {
    pub params: ClusterParams,
    /// Tweet id to cluster label; -1 is noise.
    pub labels: BTreeMap<String, i64>,
    pub n_clusters: usize,
    pub n_noise: usize,
    pub dbcv: f64,
    /// Whether `dbcv` reached the floor used for the search.
    pub survived: bool,
}

impl ClusterRun {
    pub fn new(params: ClusterParams, labels: BTreeMap<String, i64>, dbcv: f64, floor: f64) -> Self {
        let n_clusters = labels.values().filter(|&&l| l >= 0).collect::<BTreeSet<_>>().len();
        let n_noise = labels.values().filter(|&&l| l < 0).count();
        Self {
            params,
            labels,
            n_clusters,
            n_noise,
            dbcv,
            survived: dbcv >= floor,
        }
    }

    pub fn cluster_sizes(&self) -> BTreeMap<i64, usize> {
        let mut sizes = BTreeMap::new();
        for &l in self.labels.values().filter(|&&l| l >= 0) {
            *sizes.entry(l).or_default() += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridFailure {
    pub params: ClusterParams,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    /// Every run that produced a DBCV value, sorted by parameters.
    pub runs: Vec<ClusterRun>,
    pub failures: Vec<GridFailure>,
    pub surviving: usize,
}

/// `min_cluster_size` 2..=15, `min_samples` 1..=10 (never above the cluster
/// size), Euclidean and Manhattan, EOM and leaf selection.
pub fn default_grid() -> Vec<ClusterParams> {
    let mut grid = Vec::new();
    for min_cluster_size in 2..=15 {
        for min_samples in 1..=min_cluster_size.min(10) {
            for metric in [Metric::Euclidean, Metric::Manhattan] {
                for cluster_selection_method in [SelectionMethod::Eom, SelectionMethod::Leaf] {
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

/// Runs HDBSCAN for every grid point and scores each labelling with DBCV.
///
/// Work shared between grid points (distance matrices per metric, linkage
/// trees per metric and `min_samples`) is computed once.
pub fn grid_search_clusters(m: &EmbeddingMatrix, grid: &[ClusterParams], dbcv_floor: f64) -> GridOutcome {
    let metrics: BTreeSet<Metric> = grid.iter().map(|p| p.metric).collect();
    let distances: HashMap<Metric, Array2<f64>> = metrics
        .into_iter()
        .map(|metric| (metric, pairwise_distances(m.vectors.view(), metric)))
        .collect();

    let n = m.len();
    let linkage_keys: BTreeSet<(Metric, usize)> = grid
        .iter()
        .filter(|p| p.validate().is_ok() && p.min_samples <= n)
        .map(|p| (p.metric, p.min_samples))
        .collect();
    let linkages: HashMap<(Metric, usize), _> = linkage_keys
        .into_par_iter()
        .map(|key| (key, linkage_for(&distances[&key.0], key.1)))
        .collect();

    let results: Vec<Result<ClusterRun, GridFailure>> = grid
        .par_iter()
        .map(|params| {
            let fail = |e: ClusterError| GridFailure {
                params: *params,
                error: e.to_string(),
            };
            params.validate().map_err(fail)?;
            let merges = linkages.get(&(params.metric, params.min_samples)).ok_or_else(|| {
                fail(ClusterError::InvalidParams(format!(
                    "min_samples {} exceeds {} points",
                    params.min_samples, n
                )))
            })?;
            let labels = condense(n, merges, params.min_cluster_size).labels(params.cluster_selection_method);
            let dbcv = dbcv_with_distances(&distances[&params.metric], &labels, m.dim()).map_err(fail)?;
            let labels = m.ids.iter().cloned().zip(labels).collect();
            Ok(ClusterRun::new(*params, labels, dbcv, dbcv_floor))
        })
        .collect();

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(run) => runs.push(run),
            Err(f) => failures.push(f),
        }
    }
    runs.sort_by_key(|a| a.params);
    failures.sort_by_key(|a| a.params);
    let surviving = runs.iter().filter(|r| r.survived).count();
    GridOutcome {
        runs,
        failures,
        surviving,
    }
}

/// Preference order: more clusters, then less noise, then higher DBCV, then
/// smaller parameters.
pub(crate) fn preference(a: &ClusterRun, b: &ClusterRun) -> Ordering {
    b.n_clusters
        .cmp(&a.n_clusters)
        .then(a.n_noise.cmp(&b.n_noise))
        .then(b.dbcv.total_cmp(&a.dbcv))
        .then(a.params.cmp(&b.params))
}

/// The preferred run among those with `dbcv >= dbcv_floor`.
pub fn select_best_run(runs: &[ClusterRun], dbcv_floor: f64) -> Result<&ClusterRun, ClusterError> {
    runs.iter()
        .filter(|r| r.dbcv >= dbcv_floor)
        .min_by(|a, b| preference(a, b))
        .ok_or(ClusterError::NoSurvivingRuns)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(n_clusters: usize, n_noise: usize, dbcv: f64, mcs: usize) -> ClusterRun {
        ClusterRun {
            params: ClusterParams {
                min_cluster_size: mcs,
                min_samples: 1,
                metric: Metric::Euclidean,
                cluster_selection_method: SelectionMethod::Eom,
            },
            labels: BTreeMap::new(),
            n_clusters,
            n_noise,
            dbcv,
            survived: dbcv >= DEFAULT_DBCV_FLOOR,
        }
    }

    #[test]
    fn grid_size() {
        let grid = default_grid();
        assert_eq!(grid.len(), 416);
        assert!(grid.iter().all(|p| p.validate().is_ok()));
    }

    #[test]
    fn rule_application() {
        let runs = [run(10, 50, 0.5, 2), run(12, 400, 0.5, 3), run(12, 300, 0.5, 4)];
        assert_eq!(select_best_run(&runs, 0.1).unwrap().n_noise, 300);
        assert_eq!(select_best_run(&runs[..1], 0.1).unwrap(), &runs[0]);
        let low = [run(50, 0, 0.05, 2), run(3, 10, 0.2, 3)];
        assert_eq!(select_best_run(&low, 0.1).unwrap().n_clusters, 3);
        assert_eq!(select_best_run(&low, 1.1), Err(ClusterError::NoSurvivingRuns));
    }
}
