//! Label-based discriminability: mean-pooled embeddings, the Fisher score
//! `tr(S_b)/tr(S_w)`, and Pearson/Spearman correlation between series.
//!
//! The Fisher score needs ground-truth labels, so it serves as a diagnostic
//! reference for HFR rather than a selection criterion.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::reduce::pairwise_sum;
use crate::tensor_io::FeatureMap;

/// Mean over the token axis of a row-major `(n_tokens × dim)` matrix.
pub fn pool_tokens(tokens: &[f64], dim: usize) -> Result<Vec<f64>> {
    if dim == 0 || tokens.is_empty() {
        return Err(Error::EmptyInput("pooling needs at least one token".into()));
    }
    if !tokens.len().is_multiple_of(dim) {
        return Err(Error::ShapeMismatch(format!(
            "{} values do not form rows of width {dim}",
            tokens.len()
        )));
    }
    let n = tokens.len() / dim;
    Ok((0..dim)
        .map(|c| {
            let col: Vec<f64> = tokens.iter().skip(c).step_by(dim).copied().collect();
            pairwise_sum(&col) / n as f64
        })
        .collect())
}

/// Mean over all spatial positions, one value per channel.
pub fn pool_map(map: &FeatureMap) -> Vec<f64> {
    let n = map.plane_len() as f64;
    map.channel_iter().map(|ch| pairwise_sum(ch) / n).collect()
}

/// Embeddings with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEmbeddingSet {
    dim: usize,
    embeddings: Vec<f64>,
    labels: Vec<i64>,
    /// Distinct labels, ascending; class `k` is `classes[k]`.
    classes: Vec<i64>,
    class_of: Vec<usize>,
}

impl LabeledEmbeddingSet {
    /// `embeddings` is row-major `(N × dim)`. Labels may be any integers;
    /// each distinct value is a class. Requires `N ≥ 2` and at least two
    /// classes.
    pub fn new(embeddings: Vec<f64>, dim: usize, labels: Vec<i64>) -> Result<Self> {
        if dim == 0 || !embeddings.len().is_multiple_of(dim) {
            return Err(Error::InvalidEmbeddingSet(format!(
                "{} values do not form rows of width {dim}",
                embeddings.len()
            )));
        }
        let n = embeddings.len() / dim;
        if n != labels.len() {
            return Err(Error::InvalidEmbeddingSet(format!(
                "{n} embeddings but {} labels",
                labels.len()
            )));
        }
        if n < 2 {
            return Err(Error::InvalidEmbeddingSet(format!("need N >= 2, got {n}")));
        }
        if embeddings.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("embedding entry".into()));
        }
        let mut classes = labels.clone();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::InvalidEmbeddingSet("need at least two classes".into()));
        }
        let index: BTreeMap<i64, usize> = classes.iter().enumerate().map(|(k, &c)| (c, k)).collect();
        let class_of = labels.iter().map(|l| index[l]).collect();
        Ok(LabeledEmbeddingSet {
            dim,
            embeddings,
            labels,
            classes,
            class_of,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<i64>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidEmbeddingSet("rows differ in length".into()));
        }
        Self::new(rows.concat(), dim, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[i64] {
        &self.classes
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.embeddings[i * self.dim..(i + 1) * self.dim]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &k in &self.class_of {
            counts[k] += 1;
        }
        counts
    }

    fn mean_of(&self, rows: impl Iterator<Item = usize> + Clone) -> Vec<f64> {
        let n = rows.clone().count() as f64;
        (0..self.dim)
            .map(|j| {
                let col: Vec<f64> = rows.clone().map(|i| self.embeddings[i * self.dim + j]).collect();
                pairwise_sum(&col) / n
            })
            .collect()
    }

    /// Global mean and per-class means.
    pub fn means(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let global = self.mean_of(0..self.len());
        let per_class = (0..self.class_count())
            .map(|k| {
                let members: Vec<usize> = (0..self.len()).filter(|&i| self.class_of[i] == k).collect();
                self.mean_of(members.into_iter())
            })
            .collect();
        (global, per_class)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let terms: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect();
    pairwise_sum(&terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherResult {
    pub trace_between: f64,
    pub trace_within: f64,
    pub score: f64,
}

/// Fisher score from traces alone, `O(N·d)`:
/// `tr(S_w) = Σ_k Σ_{x∈D_k} ‖x − μ_k‖²`, `tr(S_b) = Σ_k n_k‖μ_k − μ‖²`.
pub fn fisher_score(set: &LabeledEmbeddingSet) -> Result<FisherResult> {
    let (mu, class_means) = set.means();
    let within: Vec<f64> = (0..set.len())
        .map(|i| sq_dist(set.row(i), &class_means[set.class_of[i]]))
        .collect();
    let counts = set.class_counts();
    let between: Vec<f64> = class_means
        .iter()
        .zip(&counts)
        .map(|(m, &n)| n as f64 * sq_dist(m, &mu))
        .collect();
    let trace_within = pairwise_sum(&within);
    let trace_between = pairwise_sum(&between);
    if trace_within <= 0.0 {
        return Err(Error::DegenerateWithinScatter);
    }
    Ok(FisherResult {
        trace_between,
        trace_within,
        score: trace_between / trace_within,
    })
}

/// `Σ_i ‖x_i − μ‖²`; equals `tr(S_w) + tr(S_b)`.
pub fn total_scatter(set: &LabeledEmbeddingSet) -> f64 {
    let (mu, _) = set.means();
    let terms: Vec<f64> = (0..set.len()).map(|i| sq_dist(set.row(i), &mu)).collect();
    pairwise_sum(&terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub pearson: f64,
    pub spearman: f64,
}

fn check_series(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::SeriesError(format!(
            "series lengths differ: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::SeriesError(format!("need at least 3 points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::SeriesError("series contain non-finite values".into()));
    }
    Ok(())
}

fn pearson_unchecked(xs: &[f64], ys: &[f64]) -> Result<f64> {
    // Exact check first: the centred sum of a constant series need not be 0.
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::ConstantSeries("xs"));
    }
    if ys.iter().all(|&y| y == ys[0]) {
        return Err(Error::ConstantSeries("ys"));
    }
    let n = xs.len() as f64;
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(ys) / n;
    let dx: Vec<f64> = xs.iter().map(|x| x - mx).collect();
    let dy: Vec<f64> = ys.iter().map(|y| y - my).collect();
    let sxx = pairwise_sum(&dx.iter().map(|d| d * d).collect::<Vec<_>>());
    let syy = pairwise_sum(&dy.iter().map(|d| d * d).collect::<Vec<_>>());
    let sxy = pairwise_sum(&dx.iter().zip(&dy).map(|(a, b)| a * b).collect::<Vec<_>>());
    if sxx == 0.0 {
        return Err(Error::ConstantSeries("xs"));
    }
    if syy == 0.0 {
        return Err(Error::ConstantSeries("ys"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_series(xs, ys)?;
    pearson_unchecked(xs, ys)
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman correlation: Pearson on average-tie ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_series(xs, ys)?;
    pearson_unchecked(&average_ranks(xs), &average_ranks(ys))
}

pub fn correlate(xs: &[f64], ys: &[f64]) -> Result<Correlation> {
    Ok(Correlation {
        pearson: pearson(xs, ys)?,
        spearman: spearman(xs, ys)?,
    })
}

/// A `t,value` series. Reads any CSV whose first column is `t` and whose
/// second column holds the values, so HFR curve files are accepted too.
pub fn read_series(path: impl AsRef<Path>) -> Result<Vec<(u32, f64)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_series(&text).map_err(|e| match e {
        Error::SeriesError(m) => Error::SeriesError(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_series(text: &str) -> Result<Vec<(u32, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::SeriesError(e.to_string()))?.clone();
    if headers.len() < 2 || &headers[0] != "t" {
        return Err(Error::SeriesError("header must start with 't,<value>'".into()));
    }
    let mut out: Vec<(u32, f64)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::SeriesError(e.to_string()))?;
        let t: u32 = rec[0]
            .parse()
            .map_err(|_| Error::SeriesError(format!("row {}: bad t '{}'", i + 1, &rec[0])))?;
        let v: f64 = rec[1]
            .parse()
            .map_err(|_| Error::SeriesError(format!("row {}: bad value '{}'", i + 1, &rec[1])))?;
        if !v.is_finite() {
            return Err(Error::SeriesError(format!("row {}: non-finite value", i + 1)));
        }
        if out.last().is_some_and(|&(prev, _)| t <= prev) {
            return Err(Error::SeriesError(format!("row {}: t must strictly increase", i + 1)));
        }
        out.push((t, v));
    }
    Ok(out)
}

/// Pair two series on their timesteps, which must match exactly.
pub fn align_series(a: &[(u32, f64)], b: &[(u32, f64)]) -> Result<(Vec<u32>, Vec<f64>, Vec<f64>)> {
    let ta: Vec<u32> = a.iter().map(|p| p.0).collect();
    let tb: Vec<u32> = b.iter().map(|p| p.0).collect();
    if ta != tb {
        return Err(Error::SeriesError("series cover different timesteps".into()));
    }
    Ok((ta, a.iter().map(|p| p.1).collect(), b.iter().map(|p| p.1).collect()))
}
