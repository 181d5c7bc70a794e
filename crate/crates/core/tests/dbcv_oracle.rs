mod common;

use adaudit_core::clusterlab::{dbcv_score, ClusterError, EmbeddingMatrix};
use common::oracles::dbcv_brute;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn matrix(points: &[Vec<f64>]) -> EmbeddingMatrix {
    let ids = (0..points.len()).map(|i| format!("p{i}")).collect();
    EmbeddingMatrix::from_rows(ids, points.to_vec()).unwrap()
}

/// Labels over {-1, 0, 1, 2} with at least two clusters of at least two points.
fn valid_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<i64> {
    loop {
        let labels: Vec<i64> = (0..n).map(|_| rng.random_range(-1..3)).collect();
        let sizes: Vec<usize> = (0..3).map(|c| labels.iter().filter(|&&l| l == c).count()).collect();
        let present: Vec<usize> = sizes.into_iter().filter(|&s| s > 0).collect();
        if present.len() >= 2 && present.iter().all(|&s| s >= 2) {
            return labels;
        }
    }
}

fn two_blobs() -> Vec<Vec<f64>> {
    let offsets = [(0.0, 0.0), (0.3, 0.1), (-0.2, 0.25), (0.1, -0.3), (-0.25, -0.1), (0.2, 0.3)];
    let mut points = Vec::new();
    for centre in [(0.0, 0.0), (10.0, 10.0)] {
        for (dx, dy) in offsets {
            points.push(vec![centre.0 + dx, centre.1 + dy]);
        }
    }
    points
}

#[test]
fn matches_brute_force_on_random_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..50 {
        let n = rng.random_range(4..=12);
        let dim = rng.random_range(1..=3);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(0.0..10.0)).collect())
            .collect();
        let labels = valid_labels(&mut rng, n);
        let got = dbcv_score(&matrix(&points), &labels).unwrap();
        let want = dbcv_brute(&points, &labels);
        assert!((got - want).abs() < 1e-9, "got {got}, oracle {want}, labels {labels:?}");
    }
}

#[test]
fn separated_blobs_score_high_and_shuffles_score_negative() {
    let points = two_blobs();
    let m = matrix(&points);
    let truth: Vec<i64> = (0..12).map(|i| if i < 6 { 0 } else { 1 }).collect();
    let score = dbcv_score(&m, &truth).unwrap();
    assert!(score > 0.8, "{score}");
    assert!((score - dbcv_brute(&points, &truth)).abs() < 1e-9);

    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shuffled = truth.clone();
        loop {
            shuffled.shuffle(&mut rng);
            let mixed = (0..2).all(|c| {
                let first = shuffled[..6].iter().filter(|&&l| l == c).count();
                first > 0 && first < 6
            });
            if mixed {
                break;
            }
        }
        let s = dbcv_score(&m, &shuffled).unwrap();
        assert!(s < 0.0, "seed {seed}: {s}");
    }
}

#[test]
fn all_noise_is_an_error_not_nan() {
    let m = matrix(&two_blobs());
    assert!(matches!(dbcv_score(&m, &[-1; 12]), Err(ClusterError::DbcvUndefined(_))));
    assert!(matches!(dbcv_score(&m, &[0; 12]), Err(ClusterError::DbcvUndefined(_))));
}

#[test]
fn high_dimensional_points_stay_finite() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let points: Vec<Vec<f64>> = (0..20)
        .map(|i| {
            let c = if i < 10 { 0.0 } else { 3.0 };
            (0..128).map(|_| c + rng.random_range(-0.01..0.01)).collect()
        })
        .collect();
    let labels: Vec<i64> = (0..20).map(|i| (i / 10) as i64).collect();
    let s = dbcv_score(&matrix(&points), &labels).unwrap();
    assert!(s.is_finite() && s > 0.8, "{s}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn always_within_unit_interval(seed in any::<u64>(), n in 4usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
            .collect();
        let labels = valid_labels(&mut rng, n);
        let s = dbcv_score(&matrix(&points), &labels).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s), "{}", s);
    }
}
