use std::collections::{BTreeMap, HashMap};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ExplicitError, ExplicitScore};
use crate::stable_seed;

/// Candidate thresholds are `k / CANDIDATE_STEPS` for `k = 1..CANDIDATE_STEPS`.
const CANDIDATE_STEPS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub sample_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCandidate {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub bins: Vec<CalibrationBin>,
    pub threshold_candidates: Vec<ThresholdCandidate>,
    pub chosen_threshold: f64,
}

impl CalibrationReport {
    pub fn chosen(&self) -> &ThresholdCandidate {
        self.threshold_candidates
            .iter()
            .find(|c| c.threshold == self.chosen_threshold)
            .expect("chosen threshold is always a candidate")
    }
}

fn bin_count(bin_width: f64) -> Result<usize, ExplicitError> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(ExplicitError::InvalidBinWidth(bin_width));
    }
    let n = (1.0 / bin_width).round();
    if (n * bin_width - 1.0).abs() > 1e-9 {
        return Err(ExplicitError::InvalidBinWidth(bin_width));
    }
    Ok(n as usize)
}

/// Bin index of `score` among `n` equal bins over `[0, 1]`; 1.0 falls into
/// the last bin. Multiplying rather than dividing by the width keeps scores
/// such as 0.3 on the right side of their lower edge.
fn bin_of(score: f64, n: usize) -> usize {
    let raw = (score * n as f64 + 1e-12).floor();
    (raw.max(0.0) as usize).min(n - 1)
}

/// Uniform sample without replacement of up to `per_bin` ids from each score
/// bin. Output is grouped by bin in ascending order.
pub fn stratified_sample(
    scores: &[ExplicitScore],
    per_bin: usize,
    bin_width: f64,
    seed: u64,
) -> Result<Vec<String>, ExplicitError> {
    if per_bin == 0 {
        return Err(ExplicitError::InvalidSampleSize);
    }
    let n = bin_count(bin_width)?;
    let mut bins: Vec<Vec<&str>> = vec![Vec::new(); n];
    for s in scores {
        bins[bin_of(s.score, n)].push(&s.tweet_id);
    }
    let mut out = Vec::new();
    for (k, members) in bins.iter_mut().enumerate() {
        // Sort so the sample depends only on the set of members, not input order.
        members.sort_unstable();
        members.dedup();
        if members.len() <= per_bin {
            out.extend(members.iter().map(|id| id.to_string()));
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(stable_seed(seed, &format!("bin-{k}")));
        let mut picked = index::sample(&mut rng, members.len(), per_bin).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| members[i].to_string()));
    }
    Ok(out)
}

fn f1_of(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

/// Sweeps thresholds 0.1..=0.9 over the labeled sample and picks the one with
/// the highest f1, preferring the lowest threshold on ties.
pub fn calibrate_threshold(
    scores: &[ExplicitScore],
    labels: &BTreeMap<String, bool>,
) -> Result<CalibrationReport, ExplicitError> {
    if labels.is_empty() {
        return Err(ExplicitError::NoLabels);
    }
    let by_id: HashMap<&str, f64> = scores.iter().map(|s| (s.tweet_id.as_str(), s.score)).collect();
    let mut labeled = Vec::with_capacity(labels.len());
    for (id, &label) in labels {
        let score = by_id
            .get(id.as_str())
            .copied()
            .ok_or_else(|| ExplicitError::MissingScore(id.clone()))?;
        labeled.push((score, label));
    }

    let n_bins = CANDIDATE_STEPS as usize;
    let mut bin_sizes = vec![0usize; n_bins];
    for &(score, _) in &labeled {
        bin_sizes[bin_of(score, n_bins)] += 1;
    }
    let bins = bin_sizes
        .iter()
        .enumerate()
        .map(|(k, &sample_size)| CalibrationBin {
            bin_lo: k as f64 / n_bins as f64,
            bin_hi: (k + 1) as f64 / n_bins as f64,
            sample_size,
        })
        .collect();

    let mut candidates = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    for k in 1..CANDIDATE_STEPS {
        let threshold = f64::from(k) / f64::from(CANDIDATE_STEPS);
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for &(score, label) in &labeled {
            match (score >= threshold, label) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let (precision, recall, f1) = f1_of(tp, fp, fn_);
        if best.is_none_or(|(_, f)| f1 > f) {
            best = Some((threshold, f1));
        }
        candidates.push(ThresholdCandidate { threshold, precision, recall, f1 });
    }

    Ok(CalibrationReport {
        bins,
        threshold_candidates: candidates,
        chosen_threshold: best.expect("at least one candidate").0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(id: &str, score: f64) -> ExplicitScore {
        ExplicitScore {
            tweet_id: id.to_string(),
            score,
            translated: false,
            scored_text: String::new(),
        }
    }

    fn spread(n: usize) -> Vec<ExplicitScore> {
        (0..n).map(|i| s(&format!("t{i:05}"), (i as f64 + 0.5) / n as f64)).collect()
    }

    #[test]
    fn full_bins_yield_per_bin_each() {
        let scores = spread(2000);
        assert_eq!(stratified_sample(&scores, 50, 0.1, 7).unwrap().len(), 500);
        assert_eq!(stratified_sample(&scores, 20, 0.1, 7).unwrap().len(), 200);
    }

    #[test]
    fn sparse_bin_returns_all_members() {
        let mut scores = spread(1000);
        scores.retain(|x| !(0.9..1.0).contains(&x.score));
        scores.extend([s("a", 0.91), s("b", 0.95), s("c", 1.0)]);
        let sample = stratified_sample(&scores, 50, 0.1, 1).unwrap();
        assert_eq!(sample.len(), 9 * 50 + 3);
        for id in ["a", "b", "c"] {
            assert!(sample.iter().any(|x| x == id));
        }
    }

    #[test]
    fn sampling_is_deterministic_and_order_independent() {
        let scores = spread(700);
        let mut reversed = scores.clone();
        reversed.reverse();
        let a = stratified_sample(&scores, 10, 0.1, 42).unwrap();
        assert_eq!(a, stratified_sample(&reversed, 10, 0.1, 42).unwrap());
        assert_ne!(a, stratified_sample(&scores, 10, 0.1, 43).unwrap());
    }

    #[test]
    fn bad_width_rejected() {
        assert_eq!(
            stratified_sample(&[], 5, 0.3, 0),
            Err(ExplicitError::InvalidBinWidth(0.3))
        );
        assert!(stratified_sample(&[], 5, 0.25, 0).is_ok());
        assert_eq!(stratified_sample(&[], 0, 0.1, 0), Err(ExplicitError::InvalidSampleSize));
    }

    #[test]
    fn bin_edges() {
        assert_eq!(bin_of(0.3, 10), 3);
        assert_eq!(bin_of(0.29999, 10), 2);
        assert_eq!(bin_of(0.7, 10), 7);
        assert_eq!(bin_of(1.0, 10), 9);
        assert_eq!(bin_of(0.0, 10), 0);
    }

    #[test]
    fn perfect_separation_at_point_three() {
        let scores = spread(1000);
        let labels = scores.iter().map(|x| (x.tweet_id.clone(), x.score >= 0.3)).collect();
        let report = calibrate_threshold(&scores, &labels).unwrap();
        assert_eq!(report.chosen_threshold, 0.3);
        assert_eq!(report.chosen().f1, 1.0);
        assert_eq!(report.bins.len(), 10);
        assert_eq!(report.bins.iter().map(|b| b.sample_size).sum::<usize>(), 1000);
    }

    #[test]
    fn all_negative_ties_to_lowest() {
        let scores = spread(100);
        let labels = scores.iter().map(|x| (x.tweet_id.clone(), false)).collect();
        let report = calibrate_threshold(&scores, &labels).unwrap();
        assert!(report.threshold_candidates.iter().all(|c| c.f1 == 0.0));
        assert_eq!(report.chosen_threshold, 0.1);
    }

    #[test]
    fn errors() {
        assert_eq!(calibrate_threshold(&[], &BTreeMap::new()), Err(ExplicitError::NoLabels));
        let labels = BTreeMap::from([("x".to_string(), true)]);
        assert_eq!(
            calibrate_threshold(&[], &labels),
            Err(ExplicitError::MissingScore("x".into()))
        );
    }
}
