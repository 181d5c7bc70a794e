//! HDBSCAN over a precomputed distance matrix: core distances, a minimum
//! spanning tree of mutual reachability, the single-linkage hierarchy, the
//! condensed tree and flat cluster extraction.

use std::cmp::Ordering;
use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{pairwise_distances, ClusterError, EmbeddingMatrix, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Eom,
    Leaf,
}

impl SelectionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMethod::Eom => "eom",
            SelectionMethod::Leaf => "leaf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClusterParams {
    pub min_cluster_size: usize,
    pub min_samples: usize,
    pub metric: Metric,
    pub cluster_selection_method: SelectionMethod,
}

impl ClusterParams {
    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.min_cluster_size < 2 {
            return Err(ClusterError::InvalidParams("min_cluster_size must be at least 2".into()));
        }
        if self.min_samples < 1 {
            return Err(ClusterError::InvalidParams("min_samples must be at least 1".into()));
        }
        if self.min_samples > self.min_cluster_size {
            return Err(ClusterError::InvalidParams(
                "min_samples must not exceed min_cluster_size".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for ClusterParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "mcs={} ms={} {} {}",
            self.min_cluster_size,
            self.min_samples,
            self.metric.as_str(),
            self.cluster_selection_method.as_str()
        )
    }
}

/// Distance to the `min_samples`-th nearest point, counting the point itself.
pub(crate) fn core_distances(dist: &Array2<f64>, min_samples: usize) -> Vec<f64> {
    let n = dist.nrows();
    let k = min_samples.clamp(1, n.max(1)) - 1;
    (0..n)
        .map(|i| {
            let mut row = dist.row(i).to_vec();
            let (_, kth, _) = row.select_nth_unstable_by(k, f64::total_cmp);
            *kth
        })
        .collect()
}

/// Edge `(weight, lo, hi)` compared lexicographically, so every graph has a
/// unique minimum spanning tree.
pub(crate) fn edge_cmp(a: &(f64, usize, usize), b: &(f64, usize, usize)) -> Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.cmp(&b.1))
        .then(a.2.cmp(&b.2))
}

/// Prim's algorithm over the dense complete graph given by `weight`.
pub(crate) fn prim_mst(n: usize, weight: impl Fn(usize, usize) -> f64) -> Vec<(f64, usize, usize)> {
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best: Vec<Option<(f64, usize, usize)>> = vec![None; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let cand = (weight(current, v), current.min(v), current.max(v));
            if best[v].is_none_or(|b| edge_cmp(&cand, &b) == Ordering::Less) {
                best[v] = Some(cand);
            }
        }
        let (next, edge) = (0..n)
            .filter(|&v| !in_tree[v])
            .map(|v| (v, best[v].expect("every outside vertex has a candidate")))
            .min_by(|a, b| edge_cmp(&a.1, &b.1))
            .expect("an outside vertex remains");
        in_tree[next] = true;
        edges.push(edge);
        current = next;
    }
    edges
}

/// Merge step of the single-linkage dendrogram. Leaves are `0..n`; merge `k`
/// creates node `n + k`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Merge {
    left: usize,
    right: usize,
    distance: f64,
    size: usize,
}

pub(crate) fn single_linkage(n: usize, mut mst: Vec<(f64, usize, usize)>) -> Vec<Merge> {
    mst.sort_by(edge_cmp);
    let mut parent: Vec<usize> = (0..n).collect();
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for (w, a, b) in mst {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        let merged = size[ra] + size[rb];
        merges.push(Merge {
            left: node_of[ra],
            right: node_of[rb],
            distance: w,
            size: merged,
        });
        parent[rb] = ra;
        size[ra] = merged;
        node_of[ra] = n + merges.len() - 1;
    }
    merges
}

fn lambda_of(distance: f64) -> f64 {
    if distance > 0.0 {
        1.0 / distance
    } else {
        f64::MAX
    }
}

#[derive(Debug, Default)]
struct CondensedCluster {
    parent: Option<usize>,
    birth_lambda: f64,
    children: Vec<usize>,
    /// Points that leave this cluster, with the lambda at which they leave.
    points: Vec<(usize, f64)>,
    size: usize,
}

pub(crate) struct CondensedTree {
    clusters: Vec<CondensedCluster>,
    /// Cluster each point falls out of.
    home: Vec<usize>,
}

pub(crate) fn condense(n: usize, merges: &[Merge], min_cluster_size: usize) -> CondensedTree {
    let node_size = |node: usize| if node < n { 1 } else { merges[node - n].size };
    let mut clusters = vec![CondensedCluster {
        size: n,
        ..Default::default()
    }];
    let mut home = vec![0usize; n];
    if n < 2 {
        for p in 0..n {
            clusters[0].points.push((p, f64::MAX));
        }
        return CondensedTree { clusters, home };
    }

    let leaves_under = |node: usize, out: &mut Vec<usize>| {
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if x < n {
                out.push(x);
            } else {
                let m = merges[x - n];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
    };

    let root = n + merges.len() - 1;
    let mut stack = vec![(root, 0usize)];
    let mut fallen = Vec::new();
    while let Some((node, cluster)) = stack.pop() {
        if node < n {
            // Only reachable when a lone leaf continues a cluster.
            clusters[cluster].points.push((node, f64::MAX));
            home[node] = cluster;
            continue;
        }
        let m = merges[node - n];
        let lambda = lambda_of(m.distance);
        let (sl, sr) = (node_size(m.left), node_size(m.right));
        let big_l = sl >= min_cluster_size;
        let big_r = sr >= min_cluster_size;
        if big_l && big_r {
            for (child, size) in [(m.left, sl), (m.right, sr)] {
                let id = clusters.len();
                clusters.push(CondensedCluster {
                    parent: Some(cluster),
                    birth_lambda: lambda,
                    size,
                    ..Default::default()
                });
                clusters[cluster].children.push(id);
                stack.push((child, id));
            }
            continue;
        }
        for (child, big) in [(m.left, big_l), (m.right, big_r)] {
            if big {
                stack.push((child, cluster));
            } else {
                fallen.clear();
                leaves_under(child, &mut fallen);
                for &p in &fallen {
                    clusters[cluster].points.push((p, lambda));
                    home[p] = cluster;
                }
            }
        }
    }
    CondensedTree { clusters, home }
}

impl CondensedTree {
    fn stabilities(&self) -> Vec<f64> {
        self.clusters
            .iter()
            .map(|c| {
                let from_points: f64 = c.points.iter().map(|&(_, l)| l - c.birth_lambda).sum();
                let from_children: f64 = c
                    .children
                    .iter()
                    .map(|&k| (self.clusters[k].birth_lambda - c.birth_lambda) * self.clusters[k].size as f64)
                    .sum();
                from_points + from_children
            })
            .collect()
    }

    fn select(&self, method: SelectionMethod) -> Vec<bool> {
        let k = self.clusters.len();
        let mut selected = vec![false; k];
        match method {
            SelectionMethod::Leaf => {
                for (sel, cluster) in selected.iter_mut().zip(&self.clusters).skip(1) {
                    *sel = cluster.children.is_empty();
                }
            }
            SelectionMethod::Eom => {
                let mut stability = self.stabilities();
                // Children always carry larger indices than their parent.
                for c in (1..k).rev() {
                    let subtree: f64 = self.clusters[c].children.iter().map(|&x| stability[x]).sum();
                    if stability[c] < subtree {
                        stability[c] = subtree;
                    } else {
                        selected[c] = true;
                        let mut stack = self.clusters[c].children.clone();
                        while let Some(x) = stack.pop() {
                            selected[x] = false;
                            stack.extend_from_slice(&self.clusters[x].children);
                        }
                    }
                }
            }
        }
        selected
    }

    /// Flat labels: each point takes the label of its nearest selected
    /// ancestor, or -1. Labels number selected clusters in tree order.
    pub(crate) fn labels(&self, method: SelectionMethod) -> Vec<i64> {
        let selected = self.select(method);
        let mut ordinal = vec![-1i64; selected.len()];
        let mut next = 0;
        for (c, &s) in selected.iter().enumerate() {
            if s {
                ordinal[c] = next;
                next += 1;
            }
        }
        self.home
            .iter()
            .map(|&h| {
                let mut c = Some(h);
                while let Some(x) = c {
                    if selected[x] {
                        return ordinal[x];
                    }
                    c = self.clusters[x].parent;
                }
                -1
            })
            .collect()
    }
}

/// Single-linkage hierarchy of the mutual-reachability graph for one
/// `min_samples` value; reusable across cluster sizes and selection methods.
pub(crate) fn linkage_for(dist: &Array2<f64>, min_samples: usize) -> Vec<Merge> {
    let n = dist.nrows();
    let core = core_distances(dist, min_samples);
    let mst = prim_mst(n, |a, b| dist[[a, b]].max(core[a]).max(core[b]));
    single_linkage(n, mst)
}

pub fn hdbscan_with_distances(
    dist: &Array2<f64>,
    params: &ClusterParams,
) -> Result<Vec<i64>, ClusterError> {
    params.validate()?;
    let n = dist.nrows();
    if params.min_samples > n {
        return Err(ClusterError::InvalidParams(format!(
            "min_samples {} exceeds {} points",
            params.min_samples, n
        )));
    }
    let merges = linkage_for(dist, params.min_samples);
    Ok(condense(n, &merges, params.min_cluster_size).labels(params.cluster_selection_method))
}

pub fn hdbscan(m: &EmbeddingMatrix, params: &ClusterParams) -> Result<Vec<i64>, ClusterError> {
    hdbscan_with_distances(&pairwise_distances(m.vectors.view(), params.metric), params)
}
