//! Definitional reference implementations used as test oracles. They favour
//! directness over speed and share no code with the library.

#![allow(dead_code)]

use std::collections::BTreeMap;

/// Euclidean distance between two points.
pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Kruskal MST over the complete graph on `nodes`, edges ordered by
/// (weight, lower node, higher node). Returns (weight, a, b) with a < b.
fn kruskal(nodes: &[usize], w: &dyn Fn(usize, usize) -> f64) -> Vec<(f64, usize, usize)> {
    let mut edges = Vec::new();
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            edges.push((w(a, b), a.min(b), a.max(b)));
        }
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut comp: BTreeMap<usize, usize> = nodes.iter().map(|&n| (n, n)).collect();
    let mut tree = Vec::new();
    for (wt, a, b) in edges {
        let (ca, cb) = (comp[&a], comp[&b]);
        if ca != cb {
            for v in comp.values_mut() {
                if *v == cb {
                    *v = ca;
                }
            }
            tree.push((wt, a, b));
        }
    }
    tree
}

/// DBCV straight from its definition. `labels` < 0 are noise.
pub fn dbcv_brute(points: &[Vec<f64>], labels: &[i64]) -> f64 {
    let dim = points[0].len() as f64;
    let n = points.len();
    let mut clusters: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        if l >= 0 {
            clusters.entry(l).or_default().push(i);
        }
    }
    let d = |a: usize, b: usize| euclid(&points[a], &points[b]);
    let mut core = vec![0.0; n];
    for members in clusters.values() {
        for &o in members {
            let others: Vec<f64> = members.iter().filter(|&&x| x != o).map(|&x| d(o, x)).collect();
            core[o] = if others.contains(&0.0) {
                0.0
            } else {
                let mean = others.iter().map(|x| (1.0 / x).powf(dim)).sum::<f64>() / others.len() as f64;
                mean.powf(-1.0 / dim)
            };
        }
    }
    let mrd = |a: usize, b: usize| d(a, b).max(core[a]).max(core[b]);

    let mut sparse = BTreeMap::new();
    let mut internal: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (&l, members) in &clusters {
        let tree = kruskal(members, &mrd);
        let degree = |v: usize| tree.iter().filter(|e| e.1 == v || e.2 == v).count();
        let mut nodes: Vec<usize> = members.iter().copied().filter(|&v| degree(v) > 1).collect();
        if nodes.is_empty() {
            nodes = members.clone();
        }
        let inner: Vec<f64> = tree
            .iter()
            .filter(|e| nodes.contains(&e.1) && nodes.contains(&e.2))
            .map(|e| e.0)
            .collect();
        let dsc = if inner.is_empty() {
            tree.iter().map(|e| e.0).fold(0.0, f64::max)
        } else {
            inner.into_iter().fold(0.0, f64::max)
        };
        sparse.insert(l, dsc);
        internal.insert(l, nodes);
    }
    let mut total = 0.0;
    for (&l, members) in &clusters {
        let mut dspc = f64::INFINITY;
        for (&k, other) in &internal {
            if k == l {
                continue;
            }
            for &a in &internal[&l] {
                for &b in other {
                    dspc = dspc.min(mrd(a, b));
                }
            }
        }
        let dsc = sparse[&l];
        let v = if dspc.max(dsc) > 0.0 {
            (dspc - dsc) / dspc.max(dsc)
        } else {
            0.0
        };
        total += members.len() as f64 / n as f64 * v;
    }
    total
}

/// Fleiss' kappa computed from raw per-item labels by enumerating rater
/// pairs.
pub fn fleiss_brute(items: &[Vec<String>]) -> f64 {
    let n_items = items.len() as f64;
    let raters = items[0].len();
    let mut p_bar = 0.0;
    let mut marginals: BTreeMap<&str, f64> = BTreeMap::new();
    for labels in items {
        let mut agree = 0usize;
        for i in 0..raters {
            for j in 0..raters {
                if i != j && labels[i] == labels[j] {
                    agree += 1;
                }
            }
            *marginals.entry(&labels[i]).or_default() += 1.0;
        }
        p_bar += agree as f64 / (raters * (raters - 1)) as f64;
    }
    p_bar /= n_items;
    let total = n_items * raters as f64;
    let p_e: f64 = marginals.values().map(|c| (c / total).powi(2)).sum();
    (p_bar - p_e) / (1.0 - p_e)
}

/// f1 at `threshold` via the confusion-matrix identity 2tp / (2tp + fp + fn).
pub fn f1_confusion(scored: &[(f64, bool)], threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for &(s, y) in scored {
        match (s >= threshold, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    if tp == 0 {
        0.0
    } else {
        (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// URL score evaluated literally: the larger of the embedded and landing totals.
pub fn url_score_brute(mal_e: u32, sus_e: u32, mal_l: u32, sus_l: u32) -> u32 {
    let embedded = mal_e + sus_e;
    let landing = mal_l + sus_l;
    if embedded >= landing {
        embedded
    } else {
        landing
    }
}

/// Modularity of a partition, summing over ordered node pairs.
pub fn modularity_brute(adj: &[Vec<f64>], partition: &[usize]) -> f64 {
    let n = adj.len();
    let two_m: f64 = adj.iter().flatten().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let k: Vec<f64> = adj.iter().map(|r| r.iter().sum()).collect();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if partition[i] == partition[j] {
                q += adj[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Every set partition of `n` items as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let max = prefix.iter().copied().max().map_or(0, |m| m + 1);
        for c in 0..=max {
            prefix.push(c);
            grow(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        grow(&mut Vec::new(), n, &mut out);
    }
    out
}

/// Partition with the highest modularity, first in enumeration order on ties.
pub fn best_partition_brute(adj: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for p in all_partitions(adj.len()) {
        let q = modularity_brute(adj, &p);
        if q > best.1 + 1e-12 {
            best = (p, q);
        }
    }
    best
}

/// Canonical form of a partition (restricted growth string).
pub fn canonical(partition: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    partition
        .iter()
        .map(|&c| {
            let next = map.len();
            *map.entry(c).or_insert(next)
        })
        .collect()
}
