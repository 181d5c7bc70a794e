use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::preference;
use super::{ClusterError, ClusterRun};
use crate::stable_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    AboveFloor,
    BelowFloor,
}

/// An ad drawn for blind labelling. `hidden_cluster_label` must never reach
/// annotators; it is only compared against their answers afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlindItem {
    pub tweet_id: String,
    pub hidden_cluster_label: i64,
}

/// Samples `n` clustered ads from the preferred run of a DBCV stratum, with
/// every cluster of that run represented at least once.
///
/// Returns the sampled run alongside the items, which come back shuffled.
pub fn blind_validation_sample(
    runs: &[ClusterRun],
    dbcv_floor: f64,
    stratum: Stratum,
    n: usize,
    seed: u64,
) -> Result<(&ClusterRun, Vec<BlindItem>), ClusterError> {
    let run = runs
        .iter()
        .filter(|r| match stratum {
            Stratum::AboveFloor => r.dbcv >= dbcv_floor,
            Stratum::BelowFloor => r.dbcv < dbcv_floor,
        })
        .min_by(|a, b| preference(a, b))
        .ok_or(ClusterError::EmptyStratum)?;

    let mut members: BTreeMap<i64, Vec<&str>> = BTreeMap::new();
    for (id, &l) in &run.labels {
        if l >= 0 {
            members.entry(l).or_default().push(id);
        }
    }
    if n < members.len() {
        return Err(ClusterError::SampleTooSmall {
            n,
            clusters: members.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(stable_seed(seed, "blind-sample"));
    let mut items = Vec::with_capacity(n);
    let mut rest = Vec::new();
    for (&label, ids) in &members {
        let pick = rng.random_range(0..ids.len());
        for (i, id) in ids.iter().enumerate() {
            if i == pick {
                items.push(BlindItem {
                    tweet_id: id.to_string(),
                    hidden_cluster_label: label,
                });
            } else {
                rest.push((*id, label));
            }
        }
    }
    let extra = (n - items.len()).min(rest.len());
    for i in index::sample(&mut rng, rest.len(), extra).into_vec() {
        let (id, label) = rest[i];
        items.push(BlindItem {
            tweet_id: id.to_string(),
            hidden_cluster_label: label,
        });
    }
    items.shuffle(&mut rng);
    Ok((run, items))
}
