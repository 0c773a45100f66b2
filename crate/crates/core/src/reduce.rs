//! Deterministic pairwise (cascade) summation.
//!
//! The split points depend only on the slice length, so the result is a
//! fixed function of the input order. Parallel callers compute their terms
//! in any order, collect them into a `Vec` in a canonical order, and reduce
//! here; the outcome is then independent of the thread count.

const BLOCK: usize = 8;

/// Sum `values` by recursive halving, with a sequential base case of at most
/// eight terms.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(x)` over `values`.
pub fn pairwise_sum_map<T>(values: &[T], f: impl Fn(&T) -> f64) -> f64 {
    let mapped: Vec<f64> = values.iter().map(f).collect();
    pairwise_sum(&mapped)
}

/// Pairwise arithmetic mean. Returns `None` for an empty slice.
pub fn pairwise_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(pairwise_sum(values) / values.len() as f64)
    }
}
