use std::collections::{BTreeMap, HashMap};

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClusterRun, EmbeddingMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityAssignment {
    /// Cluster label to community id; ids are dense and ordered by the
    /// smallest cluster label they contain.
    pub communities: BTreeMap<i64, usize>,
    pub modularity: f64,
}

/// Newman modularity of `partition` over a symmetric weighted adjacency
/// matrix. Zero for an edgeless graph.
pub fn modularity(adj: &Array2<f64>, partition: &[usize]) -> f64 {
    let two_m: f64 = adj.sum();
    if two_m <= 0.0 {
        return 0.0;
    }
    let k: Vec<f64> = adj.rows().into_iter().map(|r| r.sum()).collect();
    let n = adj.nrows();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if partition[i] == partition[j] {
                q += adj[[i, j]] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

fn renumber(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Local moving phase: returns a dense community id per node.
fn one_level(adj: &Array2<f64>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = adj.nrows();
    let two_m: f64 = adj.sum();
    let mut comm: Vec<usize> = (0..n).collect();
    if two_m <= 0.0 {
        return comm;
    }
    let k: Vec<f64> = adj.rows().into_iter().map(|r| r.sum()).collect();
    let mut tot = k.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    loop {
        let mut moved = false;
        for &i in &order {
            let current = comm[i];
            tot[current] -= k[i];
            let mut links: BTreeMap<usize, f64> = BTreeMap::new();
            for j in 0..n {
                if j != i && adj[[i, j]] > 0.0 {
                    *links.entry(comm[j]).or_default() += adj[[i, j]];
                }
            }
            let gain = |c: usize, w: f64| w - tot[c] * k[i] / two_m;
            let mut best = current;
            let mut best_gain = gain(current, links.get(&current).copied().unwrap_or(0.0));
            for (&c, &w) in &links {
                let g = gain(c, w);
                if g > best_gain + 1e-12 {
                    best = c;
                    best_gain = g;
                }
            }
            tot[best] += k[i];
            if best != current {
                comm[i] = best;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    renumber(&comm)
}

fn aggregate(adj: &Array2<f64>, comm: &[usize], k: usize) -> Array2<f64> {
    let mut out = Array2::zeros((k, k));
    for ((i, j), &w) in adj.indexed_iter() {
        out[[comm[i], comm[j]]] += w;
    }
    out
}

/// Louvain community detection; returns a dense community id per node.
pub(crate) fn louvain(adj: &Array2<f64>, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment: Vec<usize> = (0..adj.nrows()).collect();
    let mut graph = adj.clone();
    loop {
        let comm = one_level(&graph, &mut rng);
        let k = comm.iter().max().map_or(0, |m| m + 1);
        assignment = assignment.iter().map(|&s| comm[s]).collect();
        if k == graph.nrows() {
            break;
        }
        graph = aggregate(&graph, &comm, k);
    }
    renumber(&assignment)
}

fn centroids(run: &ClusterRun, m: &EmbeddingMatrix) -> BTreeMap<i64, Array1<f64>> {
    let mut sums: BTreeMap<i64, (Array1<f64>, usize)> = BTreeMap::new();
    for (i, id) in m.ids.iter().enumerate() {
        if let Some(&l) = run.labels.get(id) {
            if l >= 0 {
                let entry = sums.entry(l).or_insert_with(|| (Array1::zeros(m.dim()), 0));
                entry.0 += &m.vectors.row(i);
                entry.1 += 1;
            }
        }
    }
    sums.into_iter().map(|(l, (s, c))| (l, s / c as f64)).collect()
}

fn cosine(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let denom = a.dot(a).sqrt() * b.dot(b).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        a.dot(b) / denom
    }
}

/// Groups a run's clusters into communities over the graph of centroid
/// cosine similarities at or above `similarity_floor`.
pub fn cluster_communities(
    run: &ClusterRun,
    m: &EmbeddingMatrix,
    similarity_floor: f64,
    seed: u64,
) -> CommunityAssignment {
    let cents = centroids(run, m);
    let labels: Vec<i64> = cents.keys().copied().collect();
    let vecs: Vec<&Array1<f64>> = cents.values().collect();
    let n = labels.len();
    let adj = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            return 0.0;
        }
        let s = cosine(vecs[i], vecs[j]);
        if s >= similarity_floor && s > 0.0 {
            s
        } else {
            0.0
        }
    });
    let partition = louvain(&adj, seed);
    CommunityAssignment {
        modularity: modularity(&adj, &partition),
        communities: labels.into_iter().zip(partition).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cliques() {
        let mut adj = Array2::zeros((6, 6));
        for group in [[0, 1, 2], [3, 4, 5]] {
            for &i in &group {
                for &j in &group {
                    if i != j {
                        adj[[i, j]] = 1.0;
                    }
                }
            }
        }
        let p = louvain(&adj, 3);
        assert_eq!(p, vec![0, 0, 0, 1, 1, 1]);
        assert!((modularity(&adj, &p) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn edgeless_graph_keeps_singletons() {
        let adj = Array2::zeros((4, 4));
        assert_eq!(louvain(&adj, 0), vec![0, 1, 2, 3]);
        assert_eq!(modularity(&adj, &[0, 0, 1, 1]), 0.0);
    }
}
