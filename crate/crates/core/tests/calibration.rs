mod common;

use std::collections::BTreeMap;

use adaudit_core::explicit::{calibrate_threshold, classify_adult, stratified_sample, ExplicitScore};
use common::oracles::f1_confusion;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn score(id: String, score: f64) -> ExplicitScore {
    ExplicitScore {
        tweet_id: id,
        score,
        translated: false,
        scored_text: String::new(),
    }
}

/// 50 ads per 0.1-wide score bin.
fn stratified_scores(rng: &mut ChaCha8Rng) -> Vec<ExplicitScore> {
    (0..500)
        .map(|i| {
            let bin = (i / 50) as f64;
            score(format!("s{i:03}"), (bin + rng.random_range(0.0..1.0)) / 10.0)
        })
        .collect()
}

#[test]
fn sweep_selects_point_three_under_five_percent_noise() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores = stratified_scores(&mut rng);
        let labels: BTreeMap<String, bool> = scores
            .iter()
            .map(|s| {
                let truth = s.score >= 0.3;
                (s.tweet_id.clone(), if rng.random_bool(0.05) { !truth } else { truth })
            })
            .collect();
        let report = calibrate_threshold(&scores, &labels).unwrap();
        assert_eq!(report.chosen_threshold, 0.3, "seed {seed}");
    }
}

#[test]
fn noise_free_f1_is_exactly_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let scores = stratified_scores(&mut rng);
    let labels = scores.iter().map(|s| (s.tweet_id.clone(), s.score >= 0.3)).collect();
    let report = calibrate_threshold(&scores, &labels).unwrap();
    assert_eq!(report.chosen_threshold, 0.3);
    assert_eq!(report.chosen().f1, 1.0);
    assert!(report.bins.iter().all(|b| b.sample_size == 50));
}

#[test]
fn replayed_sample_peaks_at_point_three_with_f1_point_nine_two() {
    // 500 ads, 50 per bin. Positives: all of bins 3-9 except 28 planted
    // negatives (20 in bin 3, the rest spread above), plus 28 positives below
    // 0.3 (20 in bin 2, 6 in bin 1, 2 in bin 0). At t = 0.3 this gives
    // tp = 322, fp = 28, fn = 28 and f1 = 644 / 700 = 0.92.
    let mut scores = Vec::new();
    let mut labels = BTreeMap::new();
    let below_positive = [2usize, 6, 20];
    let above_negative = [20usize, 2, 2, 1, 1, 1, 1];
    for bin in 0..10usize {
        for k in 0..50usize {
            let id = format!("b{bin}-{k:02}");
            scores.push(score(id.clone(), (bin as f64 + (k as f64 + 0.5) / 50.0) / 10.0));
            let positive = if bin < 3 { k < below_positive[bin] } else { k >= above_negative[bin - 3] };
            labels.insert(id, positive);
        }
    }
    let report = calibrate_threshold(&scores, &labels).unwrap();
    assert_eq!(report.chosen_threshold, 0.3);
    assert!((report.chosen().f1 - 0.92).abs() < 1e-12);
}

#[test]
fn stratified_sample_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let scores: Vec<ExplicitScore> = (0..5000)
        .map(|i| score(format!("x{i}"), rng.random_range(0.0..1.0)))
        .collect();
    assert_eq!(stratified_sample(&scores, 50, 0.1, 4).unwrap().len(), 500);
    assert_eq!(stratified_sample(&scores, 20, 0.1, 4).unwrap().len(), 200);
}

proptest! {
    #[test]
    fn candidates_match_confusion_matrix_oracle(
        raw in prop::collection::vec((0.0f64..=1.0, any::<bool>()), 1..40)
    ) {
        let scores: Vec<ExplicitScore> = raw
            .iter()
            .enumerate()
            .map(|(i, (s, _))| score(format!("t{i}"), *s))
            .collect();
        let labels: BTreeMap<String, bool> =
            raw.iter().enumerate().map(|(i, (_, y))| (format!("t{i}"), *y)).collect();
        let report = calibrate_threshold(&scores, &labels).unwrap();
        let best = report.threshold_candidates.iter().map(|c| c.f1).fold(f64::MIN, f64::max);
        for c in &report.threshold_candidates {
            prop_assert!((0.0..=1.0).contains(&c.precision));
            prop_assert!((0.0..=1.0).contains(&c.recall));
            prop_assert!((c.f1 - f1_confusion(&raw, c.threshold)).abs() < 1e-12);
        }
        let first_best = report
            .threshold_candidates
            .iter()
            .find(|c| c.f1 == best)
            .unwrap();
        prop_assert_eq!(report.chosen_threshold, first_best.threshold);
    }

    #[test]
    fn classify_is_a_monotone_partition(
        raw in prop::collection::vec(0.0f64..=1.0, 0..50),
        t1 in 0.01f64..0.99,
        t2 in 0.01f64..0.99,
    ) {
        let scores: Vec<ExplicitScore> =
            raw.iter().enumerate().map(|(i, s)| score(format!("t{i}"), *s)).collect();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = classify_adult(&scores, lo).unwrap();
        let b = classify_adult(&scores, hi).unwrap();
        prop_assert_eq!(a.adult.len() + a.other.len(), scores.len());
        prop_assert!(a.adult.is_disjoint(&a.other));
        prop_assert!(b.adult.is_subset(&a.adult));
    }

    #[test]
    fn sample_is_deterministic_and_stays_in_bins(seed in any::<u64>(), per_bin in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores: Vec<ExplicitScore> = (0..60)
            .map(|i| score(format!("t{i:02}"), rng.random_range(0.0..=1.0)))
            .collect();
        let a = stratified_sample(&scores, per_bin, 0.1, seed).unwrap();
        prop_assert_eq!(&a, &stratified_sample(&scores, per_bin, 0.1, seed).unwrap());
        let by_id: BTreeMap<&str, f64> = scores.iter().map(|s| (s.tweet_id.as_str(), s.score)).collect();
        let mut per: BTreeMap<usize, usize> = BTreeMap::new();
        for id in &a {
            let s = by_id[id.as_str()];
            *per.entry(((s * 10.0) as usize).min(9)).or_default() += 1;
        }
        prop_assert!(per.values().all(|&c| c <= per_bin));
    }
}
