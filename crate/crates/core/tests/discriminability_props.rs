mod common;

use aselect::discriminability::{
    correlate, fisher_score, pool_tokens, spearman, total_scatter, LabeledEmbeddingSet,
};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn instance(seed: u64) -> (Vec<Vec<f64>>, Vec<i64>) {
    let mut r = rng(seed);
    let c = r.random_range(2..=5usize);
    let n = r.random_range(c + 1..=100);
    let d = r.random_range(1..=10);
    let labels: Vec<i64> = (0..n).map(|i| if i < c { i as i64 } else { r.random_range(0..c as i64) }).collect();
    let rows = labels
        .iter()
        .map(|&l| (0..d).map(|_| r.random_range(-1.0..1.0) + l as f64).collect())
        .collect();
    (rows, labels)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #[test]
    fn trace_form_matches_scatter_matrices(seed in any::<u64>()) {
        let (rows, labels) = instance(seed);
        let got = fisher_score(&LabeledEmbeddingSet::from_rows(&rows, labels.clone()).unwrap()).unwrap();
        let (tb, tw, j) = scatter_matrix_fisher(&rows, &labels);
        prop_assert!(rel(got.trace_between, tb) <= 1e-9);
        prop_assert!(rel(got.trace_within, tw) <= 1e-9);
        prop_assert!(rel(got.score, j) <= 1e-9);
    }

    #[test]
    fn translation_and_scale_leave_j_alone(seed in any::<u64>(), shift in -100.0..100.0f64, k in prop_oneof![0.01..100.0f64, -100.0..-0.01f64]) {
        let (rows, labels) = instance(seed);
        let base = fisher_score(&LabeledEmbeddingSet::from_rows(&rows, labels.clone()).unwrap()).unwrap().score;
        let moved: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().enumerate().map(|(i, v)| v + shift * (i as f64 + 1.0)).collect()).collect();
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v * k).collect()).collect();
        let j_moved = fisher_score(&LabeledEmbeddingSet::from_rows(&moved, labels.clone()).unwrap()).unwrap().score;
        let j_scaled = fisher_score(&LabeledEmbeddingSet::from_rows(&scaled, labels).unwrap()).unwrap().score;
        // Translation by up to 1e3 costs a few digits of cancellation.
        prop_assert!(rel(j_moved, base) <= 1e-10 * (1.0 + shift.abs() * 10.0));
        prop_assert!(rel(j_scaled, base) <= 1e-10);
    }

    #[test]
    fn total_scatter_identity(seed in any::<u64>()) {
        let (rows, labels) = instance(seed);
        let set = LabeledEmbeddingSet::from_rows(&rows, labels).unwrap();
        let f = fisher_score(&set).unwrap();
        prop_assert!(rel(f.trace_between + f.trace_within, total_scatter(&set)) <= 1e-9);
    }

    #[test]
    fn pooling_is_linear(seed in any::<u64>(), k in -5.0..5.0f64) {
        let tokens = uniform_vec(&mut rng(seed), 50 * 8);
        let pooled = pool_tokens(&tokens, 8).unwrap();
        let scaled: Vec<f64> = tokens.iter().map(|v| v * k).collect();
        for (a, b) in pool_tokens(&scaled, 8).unwrap().iter().zip(&pooled) {
            prop_assert!((a - b * k).abs() <= 1e-12 * (1.0 + (b * k).abs()));
        }
    }

    #[test]
    fn spearman_ignores_monotone_transforms(seed in any::<u64>(), n in 3usize..40) {
        let mut r = rng(seed);
        // Small integer grid so ties occur.
        let xs: Vec<f64> = (0..n).map(|_| r.random_range(0..8) as f64).collect();
        let ys: Vec<f64> = (0..n).map(|_| r.random_range(0..8) as f64).collect();
        prop_assume!(xs.iter().any(|v| *v != xs[0]) && ys.iter().any(|v| *v != ys[0]));
        let base = spearman(&xs, &ys).unwrap();
        prop_assert!((base - spearman_by_counting(&xs, &ys)).abs() <= 1e-12);
        let cubed: Vec<f64> = xs.iter().map(|v| v.powi(3) - 2.0).collect();
        let logged: Vec<f64> = ys.iter().map(|v| (v + 1.0).ln()).collect();
        prop_assert!((spearman(&cubed, &logged).unwrap() - base).abs() <= 1e-12);
    }
}

#[test]
fn hand_example() {
    let set = LabeledEmbeddingSet::new(vec![0.0, 2.0, 10.0, 12.0], 1, vec![1, 1, 2, 2]).unwrap();
    let f = fisher_score(&set).unwrap();
    assert_eq!((f.trace_within, f.trace_between, f.score), (4.0, 100.0, 25.0));
    let rows = vec![vec![0.0], vec![2.0], vec![10.0], vec![12.0]];
    assert_eq!(scatter_matrix_fisher(&rows, &[1, 1, 2, 2]), (100.0, 4.0, 25.0));
}

#[test]
fn identical_class_means_score_zero() {
    let set = LabeledEmbeddingSet::new(vec![-1.0, 1.0, -2.0, 2.0], 1, vec![1, 1, 2, 2]).unwrap();
    assert_eq!(fisher_score(&set).unwrap().score, 0.0);
}

#[test]
fn degenerate_within_scatter_is_an_error() {
    let set = LabeledEmbeddingSet::new(vec![1.0, 1.0, 5.0, 5.0], 1, vec![1, 1, 2, 2]).unwrap();
    assert_eq!(fisher_score(&set).unwrap_err().class(), "DegenerateWithinScatter");
}

#[test]
fn correlation_examples() {
    let xs = [0.3, -1.0, 2.5, 4.0, 0.0];
    let lin: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
    let c = correlate(&xs, &lin).unwrap();
    assert!((c.pearson - 1.0).abs() < 1e-12 && (c.spearman - 1.0).abs() < 1e-12);
    let rev: Vec<f64> = xs.iter().map(|x| -x.powi(3)).collect();
    assert!((spearman(&xs, &rev).unwrap() + 1.0).abs() < 1e-12);
    assert_eq!(correlate(&xs, &[1.0; 5]).unwrap_err().class(), "ConstantSeries");
}

#[test]
fn resolution_table_correlation() {
    let col = table_column(512);
    let hfr: Vec<f64> = col.iter().map(|c| c.2).collect();
    let acc: Vec<f64> = col.iter().map(|c| c.1).collect();
    let c = correlate(&hfr, &acc).unwrap();
    // Frozen from an independent scipy.stats evaluation.
    assert!((c.spearman - 0.9857142857142858).abs() < 1e-12);
    assert!((c.spearman - spearman_by_counting(&hfr, &acc)).abs() < 1e-12);
    assert!((c.pearson - 0.9055).abs() < 5e-4);
}
