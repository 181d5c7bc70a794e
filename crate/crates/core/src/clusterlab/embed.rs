use ndarray::Array2;
use rayon::prelude::*;

use super::ClusterError;
use crate::corpus::TweetRecord;
use crate::services::EmbeddingClient;

/// Row-aligned embedding vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub ids: Vec<String>,
    pub vectors: Array2<f64>,
}

impl EmbeddingMatrix {
    pub fn from_rows(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, ClusterError> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * dim);
        for (id, row) in ids.iter().zip(&rows) {
            if row.len() != dim {
                return Err(ClusterError::DimensionMismatch {
                    tweet_id: id.clone(),
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(ClusterError::NonFinite(id.clone()));
            }
            flat.extend_from_slice(row);
        }
        if ids.len() != rows.len() {
            return Err(ClusterError::LabelCountMismatch {
                labels: ids.len(),
                points: rows.len(),
            });
        }
        let vectors = Array2::from_shape_vec((rows.len(), dim), flat)
            .expect("row lengths checked above");
        Ok(Self { ids, vectors })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.vectors.outer_iter().map(|r| r.to_vec()).collect()
    }
}

/// Embeds every record's text; row order follows `records`.
pub fn embed_texts(
    records: &[TweetRecord],
    client: &dyn EmbeddingClient,
) -> Result<EmbeddingMatrix, ClusterError> {
    let rows = records
        .par_iter()
        .map(|r| client.embed(&r.text))
        .collect::<Result<Vec<_>, _>>()?;
    let ids = records.iter().map(|r| r.tweet_id.clone()).collect();
    EmbeddingMatrix::from_rows(ids, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::services::ServiceError;
    use chrono::{TimeZone, Utc};

    struct LenEmbedder;

    impl EmbeddingClient for LenEmbedder {
        fn embed(&self, text: &str) -> Result<Vec<f64>, ServiceError> {
            let mut v = vec![0.0; 512];
            v[text.len() % 512] = 1.0;
            Ok(v)
        }
    }

    struct Ragged;

    impl EmbeddingClient for Ragged {
        fn embed(&self, text: &str) -> Result<Vec<f64>, ServiceError> {
            Ok(vec![0.5; if text == "b" { 3 } else { 4 }])
        }
    }

    fn rec(id: &str, text: &str) -> TweetRecord {
        TweetRecord::new(id, "a", Utc.with_ymd_and_hms(2022, 9, 1, 0, 0, 0).unwrap(), "Twitter Ads", text)
    }

    #[test]
    fn shape_and_duplicates() {
        let m = embed_texts(&[rec("1", "x"), rec("2", "yy"), rec("3", "x")], &LenEmbedder).unwrap();
        assert_eq!(m.vectors.dim(), (3, 512));
        assert_eq!(m.ids, ["1", "2", "3"]);
        assert_eq!(m.vectors.row(0), m.vectors.row(2));
    }

    #[test]
    fn ragged_widths_rejected() {
        let err = embed_texts(&[rec("1", "a"), rec("2", "b")], &Ragged).unwrap_err();
        assert!(matches!(err, ClusterError::DimensionMismatch { got: 3, expected: 4, .. }));
    }
}
