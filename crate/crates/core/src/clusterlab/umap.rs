//! Seeded UMAP: exact k-nearest neighbours, smooth kNN distances, fuzzy
//! union of the neighbour graph and SGD layout with negative sampling.
//! Runs single-threaded so that a seed fixes the output bit for bit.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{pairwise_distances, ClusterError, EmbeddingMatrix, Metric};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UmapOptions {
    pub n_neighbors: usize,
    pub n_epochs: usize,
    pub negative_sample_rate: usize,
    pub learning_rate: f64,
    /// Curve parameters of the low-dimensional similarity
    /// `1 / (1 + a d^(2b))`; the defaults correspond to `min_dist = 0.1`,
    /// `spread = 1.0`.
    pub a: f64,
    pub b: f64,
    pub metric: Metric,
}

impl Default for UmapOptions {
    fn default() -> Self {
        Self {
            n_neighbors: 15,
            n_epochs: 200,
            negative_sample_rate: 5,
            learning_rate: 1.0,
            a: 1.576943460405378,
            b: 0.8950608781227859,
            metric: Metric::Euclidean,
        }
    }
}

const SMOOTH_K_TOLERANCE: f64 = 1e-5;
const MIN_K_DIST_SCALE: f64 = 1e-3;
const GRAD_CLIP: f64 = 4.0;

/// Indices and distances of the `k` nearest points, the point itself first.
fn knn(dist: &Array2<f64>, k: usize) -> Vec<Vec<(usize, f64)>> {
    let n = dist.nrows();
    (0..n)
        .map(|i| {
            let mut others: Vec<(usize, f64)> =
                (0..n).filter(|&j| j != i).map(|j| (j, dist[[i, j]])).collect();
            others.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let mut row = Vec::with_capacity(k);
            row.push((i, 0.0));
            row.extend(others.into_iter().take(k - 1));
            row
        })
        .collect()
}

/// Per-point `(rho, sigma)` so the membership strengths of its neighbours sum
/// to `log2(k)`.
fn smooth_knn(neighbours: &[Vec<(usize, f64)>], k: usize) -> Vec<(f64, f64)> {
    let target = (k as f64).log2();
    let mean_all: f64 = {
        let total: f64 = neighbours.iter().flat_map(|r| r.iter().map(|x| x.1)).sum();
        total / (neighbours.len() * k) as f64
    };
    neighbours
        .iter()
        .map(|row| {
            let dists: Vec<f64> = row[1..].iter().map(|x| x.1).collect();
            let rho = dists.iter().copied().find(|&d| d > 0.0).unwrap_or(0.0);
            let (mut lo, mut hi, mut mid) = (0.0, f64::INFINITY, 1.0);
            for _ in 0..64 {
                let psum: f64 = dists
                    .iter()
                    .map(|&d| {
                        let d = d - rho;
                        if d > 0.0 {
                            (-d / mid).exp()
                        } else {
                            1.0
                        }
                    })
                    .sum();
                if (psum - target).abs() < SMOOTH_K_TOLERANCE {
                    break;
                }
                if psum > target {
                    hi = mid;
                    mid = (lo + hi) / 2.0;
                } else {
                    lo = mid;
                    mid = if hi.is_infinite() { mid * 2.0 } else { (lo + hi) / 2.0 };
                }
            }
            let mean_row = dists.iter().sum::<f64>() / dists.len().max(1) as f64;
            let floor = MIN_K_DIST_SCALE * if rho > 0.0 { mean_row } else { mean_all };
            (rho, mid.max(floor))
        })
        .collect()
}

/// Symmetrised fuzzy graph as `(i, j, weight)` with both directions present.
fn fuzzy_graph(neighbours: &[Vec<(usize, f64)>], params: &[(f64, f64)]) -> Vec<(usize, usize, f64)> {
    let mut directed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, row) in neighbours.iter().enumerate() {
        let (rho, sigma) = params[i];
        for &(j, d) in &row[1..] {
            let w = if d - rho <= 0.0 || sigma == 0.0 {
                1.0
            } else {
                (-(d - rho) / sigma).exp()
            };
            directed.insert((i, j), w);
        }
    }
    let mut sym: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (&(i, j), &w) in &directed {
        let back = directed.get(&(j, i)).copied().unwrap_or(0.0);
        let union = w + back - w * back;
        sym.insert((i, j), union);
        sym.insert((j, i), union);
    }
    sym.into_iter().map(|((i, j), w)| (i, j, w)).collect()
}

fn clip(v: f64) -> f64 {
    v.clamp(-GRAD_CLIP, GRAD_CLIP)
}

fn sq_dist(emb: &[f64], dim: usize, i: usize, j: usize) -> f64 {
    (0..dim)
        .map(|d| {
            let x = emb[i * dim + d] - emb[j * dim + d];
            x * x
        })
        .sum()
}

/// Projects `m` to `target_dim` dimensions. Ids keep their order.
pub fn reduce_dimensions(
    m: &EmbeddingMatrix,
    target_dim: usize,
    seed: u64,
    options: &UmapOptions,
) -> Result<EmbeddingMatrix, ClusterError> {
    if target_dim == 0 || target_dim >= m.dim() {
        return Err(ClusterError::InvalidTargetDim {
            target: target_dim,
            dim: m.dim(),
        });
    }
    let n = m.len();
    let k = options.n_neighbors.max(2);
    if n < k {
        return Err(ClusterError::TooFewPoints { got: n, needed: k });
    }

    let dist = pairwise_distances(m.vectors.view(), options.metric);
    let neighbours = knn(&dist, k);
    let params = smooth_knn(&neighbours, k);
    let graph = fuzzy_graph(&neighbours, &params);

    let n_epochs = options.n_epochs.max(1);
    let max_w = graph.iter().map(|e| e.2).fold(0.0, f64::max);
    let edges: Vec<(usize, usize, f64)> = graph
        .into_iter()
        .filter(|e| e.2 >= max_w / n_epochs as f64)
        .map(|(i, j, w)| (i, j, max_w / w))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = target_dim;
    let mut emb: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-10.0..10.0)).collect();

    let (a, b) = (options.a, options.b);
    let neg_rate = options.negative_sample_rate as f64;
    let mut next_sample: Vec<f64> = edges.iter().map(|e| e.2).collect();
    let mut next_negative: Vec<f64> = edges.iter().map(|e| e.2 / neg_rate.max(1e-12)).collect();
    let mut delta = vec![0.0; dim];

    for epoch in 0..n_epochs {
        let epoch_f = epoch as f64;
        let alpha = options.learning_rate * (1.0 - epoch_f / n_epochs as f64);
        for (e, &(i, j, per_sample)) in edges.iter().enumerate() {
            if next_sample[e] > epoch_f {
                continue;
            }
            let d2 = sq_dist(&emb, dim, i, j);
            let coeff = if d2 > 0.0 {
                -2.0 * a * b * d2.powf(b - 1.0) / (a * d2.powf(b) + 1.0)
            } else {
                0.0
            };
            for d in 0..dim {
                let g = clip(coeff * (emb[i * dim + d] - emb[j * dim + d]));
                emb[i * dim + d] += g * alpha;
                emb[j * dim + d] -= g * alpha;
            }
            next_sample[e] += per_sample;

            let per_negative = per_sample / neg_rate.max(1e-12);
            let n_neg = if options.negative_sample_rate == 0 {
                0
            } else {
                ((epoch_f - next_negative[e]) / per_negative).floor().max(0.0) as usize
            };
            for _ in 0..n_neg {
                let other = rng.random_range(0..n);
                if other == i {
                    continue;
                }
                let d2 = sq_dist(&emb, dim, i, other);
                let coeff = if d2 > 0.0 {
                    2.0 * b / ((0.001 + d2) * (a * d2.powf(b) + 1.0))
                } else {
                    0.0
                };
                for (d, slot) in delta.iter_mut().enumerate() {
                    *slot = if coeff > 0.0 {
                        clip(coeff * (emb[i * dim + d] - emb[other * dim + d]))
                    } else {
                        GRAD_CLIP
                    };
                }
                for (d, g) in delta.iter().enumerate() {
                    emb[i * dim + d] += g * alpha;
                }
            }
            next_negative[e] += n_neg as f64 * per_negative;
        }
    }

    let vectors = Array2::from_shape_vec((n, dim), emb).expect("n * dim values");
    Ok(EmbeddingMatrix {
        ids: m.ids.clone(),
        vectors,
    })
}
