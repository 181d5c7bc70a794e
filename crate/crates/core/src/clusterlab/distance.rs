use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Manhattan,
    /// Euclidean distance between L2-normalised rows, a monotone proxy for
    /// cosine distance that keeps the triangle inequality.
    Cosine,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
            Metric::Cosine => "cosine",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "euclidean" => Some(Metric::Euclidean),
            "manhattan" => Some(Metric::Manhattan),
            "cosine" => Some(Metric::Cosine),
            _ => None,
        }
    }

    fn between(self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
        match self {
            Metric::Euclidean | Metric::Cosine => a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Manhattan => a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum(),
        }
    }
}

fn normalise_rows(points: ArrayView2<f64>) -> Array2<f64> {
    let mut out = points.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        }
    }
    out
}

/// Dense symmetric distance matrix with an exact zero diagonal.
pub fn pairwise_distances(points: ArrayView2<f64>, metric: Metric) -> Array2<f64> {
    let normalised;
    let points = if metric == Metric::Cosine {
        normalised = normalise_rows(points);
        normalised.view()
    } else {
        points
    };
    let n = points.nrows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if j <= i {
                        0.0
                    } else {
                        metric.between(points.row(i), points.row(j))
                    }
                })
                .collect()
        })
        .collect();
    let mut out = Array2::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, d) in row.into_iter().enumerate().skip(i + 1) {
            out[[i, j]] = d;
            out[[j, i]] = d;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn metrics() {
        let p = array![[0.0, 0.0], [3.0, 4.0], [0.0, 2.0]];
        let e = pairwise_distances(p.view(), Metric::Euclidean);
        assert_eq!(e[[0, 1]], 5.0);
        assert_eq!(e[[1, 0]], 5.0);
        assert_eq!(e[[2, 2]], 0.0);
        let m = pairwise_distances(p.view(), Metric::Manhattan);
        assert_eq!(m[[0, 1]], 7.0);
        let c = pairwise_distances(p.view(), Metric::Cosine);
        // [3,4] and [0,2] normalise to [0.6,0.8] and [0,1].
        assert!((c[[1, 2]] - (0.36f64 + 0.04).sqrt()).abs() < 1e-12);
    }
}
