//! Density-Based Clustering Validation.
//!
//! Within each cluster, every point gets an all-points core distance
//! `apcd(o) = (Σ_{x≠o} d(o,x)^-D / (|C|-1))^(-1/D)` with `D` the data
//! dimension. Mutual reachability uses those core distances; a cluster's
//! density sparseness is the heaviest internal edge of its mutual
//! reachability MST, and the density separation of two clusters is the
//! smallest mutual reachability between their internal MST nodes. Each
//! cluster scores `(sep - sparse) / max(sep, sparse)` and the index is the
//! size-weighted sum over all points, noise included.

use std::collections::BTreeMap;

use ndarray::Array2;

use super::hdbscan::prim_mst;
use super::{pairwise_distances, ClusterError, EmbeddingMatrix, Metric};

/// `apcd` for `o` given distances to the other members of its cluster.
/// Evaluated in log space: `D` is often in the hundreds.
fn all_points_core_distance(others: impl Iterator<Item = f64>, dim: f64) -> f64 {
    let mut logs = Vec::new();
    for d in others {
        if d == 0.0 {
            return 0.0;
        }
        logs.push(-dim * d.ln());
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    (-(lse - (logs.len() as f64).ln()) / dim).exp()
}

struct ClusterShape {
    members: Vec<usize>,
    internal: Vec<usize>,
    sparseness: f64,
}

pub fn dbcv_with_distances(dist: &Array2<f64>, labels: &[i64], dim: usize) -> Result<f64, ClusterError> {
    let n = dist.nrows();
    if labels.len() != n {
        return Err(ClusterError::LabelCountMismatch {
            labels: labels.len(),
            points: n,
        });
    }
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        if l >= 0 {
            groups.entry(l).or_default().push(i);
        }
    }
    if groups.len() < 2 {
        return Err(ClusterError::DbcvUndefined(format!(
            "{} cluster(s); at least two are needed",
            groups.len()
        )));
    }
    if let Some((l, g)) = groups.iter().find(|(_, g)| g.len() < 2) {
        return Err(ClusterError::DbcvUndefined(format!(
            "cluster {l} has {} point(s)",
            g.len()
        )));
    }
    let dim = dim.max(1) as f64;

    let mut apcd = vec![0.0; n];
    for members in groups.values() {
        for &o in members {
            let others = members.iter().filter(|&&x| x != o).map(|&x| dist[[o, x]]);
            apcd[o] = all_points_core_distance(others, dim);
        }
    }
    let mrd = |a: usize, b: usize| dist[[a, b]].max(apcd[a]).max(apcd[b]);

    let shapes: Vec<ClusterShape> = groups
        .into_values()
        .map(|members| {
            let mst = prim_mst(members.len(), |a, b| mrd(members[a], members[b]));
            let mut degree = vec![0usize; members.len()];
            for &(_, a, b) in &mst {
                degree[a] += 1;
                degree[b] += 1;
            }
            let mut is_internal: Vec<bool> = degree.iter().map(|&d| d > 1).collect();
            if !is_internal.iter().any(|&x| x) {
                is_internal.fill(true);
            }
            let internal_edges: Vec<f64> = mst
                .iter()
                .filter(|&&(_, a, b)| is_internal[a] && is_internal[b])
                .map(|e| e.0)
                .collect();
            let sparseness = if internal_edges.is_empty() {
                mst.iter().map(|e| e.0).fold(0.0, f64::max)
            } else {
                internal_edges.into_iter().fold(0.0, f64::max)
            };
            let internal = members
                .iter()
                .zip(&is_internal)
                .filter(|(_, &i)| i)
                .map(|(&m, _)| m)
                .collect();
            ClusterShape {
                members,
                internal,
                sparseness,
            }
        })
        .collect();

    let mut total = 0.0;
    for (i, ci) in shapes.iter().enumerate() {
        let mut separation = f64::INFINITY;
        for (j, cj) in shapes.iter().enumerate() {
            if i == j {
                continue;
            }
            for &a in &ci.internal {
                for &b in &cj.internal {
                    separation = separation.min(mrd(a, b));
                }
            }
        }
        let denom = separation.max(ci.sparseness);
        let validity = if denom > 0.0 {
            (separation - ci.sparseness) / denom
        } else {
            0.0
        };
        total += validity * ci.members.len() as f64 / n as f64;
    }
    Ok(total)
}

pub fn dbcv_score_with_metric(
    m: &EmbeddingMatrix,
    labels: &[i64],
    metric: Metric,
) -> Result<f64, ClusterError> {
    dbcv_with_distances(&pairwise_distances(m.vectors.view(), metric), labels, m.dim())
}

/// DBCV under the Euclidean metric. `labels` align with `m.ids`; negative
/// labels mark noise.
pub fn dbcv_score(m: &EmbeddingMatrix, labels: &[i64]) -> Result<f64, ClusterError> {
    dbcv_score_with_metric(m, labels, Metric::Euclidean)
}
