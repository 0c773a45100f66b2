//! Dataset-averaged HFR curves and timestep selection by argmax.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::reduce::pairwise_mean;
use crate::spectral::HfrEvaluator;
use crate::tensor_io::{load_entry, DatasetManifest, ManifestEntry};

/// Default half-width of the near-tie band reported alongside the argmax.
pub const DEFAULT_TIE_EPSILON: f64 = 1e-4;

/// Mean HFR per timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct HfrCurve {
    timesteps: Vec<u32>,
    mean_hfr: Vec<f64>,
    counts: Vec<usize>,
    cutoff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: u32,
    pub mean_hfr: f64,
    pub n: usize,
}

impl HfrCurve {
    /// Build a curve from `(t, mean_hfr, n)` points given in strictly
    /// increasing `t`.
    pub fn new(points: &[(u32, f64, usize)], cutoff: f64) -> Result<Self> {
        for (i, &(t, h, n)) in points.iter().enumerate() {
            if !(0.0..=1.0).contains(&h) {
                return Err(Error::SeriesError(format!("t={t}: mean HFR {h} outside [0, 1]")));
            }
            if n == 0 {
                return Err(Error::SeriesError(format!("t={t}: sample count must be >= 1")));
            }
            if i > 0 && t <= points[i - 1].0 {
                return Err(Error::SeriesError(format!("t={t}: timesteps must strictly increase")));
            }
        }
        Ok(HfrCurve {
            timesteps: points.iter().map(|p| p.0).collect(),
            mean_hfr: points.iter().map(|p| p.1).collect(),
            counts: points.iter().map(|p| p.2).collect(),
            cutoff,
        })
    }

    pub fn timesteps(&self) -> &[u32] {
        &self.timesteps
    }

    pub fn mean_hfr(&self) -> &[f64] {
        &self.mean_hfr
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.timesteps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timesteps.is_empty()
    }

    pub fn points(&self) -> Vec<CurvePoint> {
        (0..self.len())
            .map(|i| CurvePoint {
                t: self.timesteps[i],
                mean_hfr: self.mean_hfr[i],
                n: self.counts[i],
            })
            .collect()
    }

    /// Apply `f` to every mean value, keeping timesteps and counts. Used to
    /// check that selection only depends on the ordering of values.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        HfrCurve {
            mean_hfr: self.mean_hfr.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// `t,mean_hfr,n` CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,mean_hfr,n\n");
        for p in self.points() {
            writeln!(s, "{},{},{}", p.t, p.mean_hfr, p.n).unwrap();
        }
        s
    }

    /// Parse `t,mean_hfr,n` or `t,<value>` CSV text (the count defaults to 1).
    pub fn from_csv(text: &str, cutoff: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| Error::SeriesError(e.to_string()))?.clone();
        if headers.len() < 2 || &headers[0] != "t" {
            return Err(Error::SeriesError("curve header must start with 't,'".into()));
        }
        let has_n = headers.get(2) == Some("n");
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::SeriesError(e.to_string()))?;
            let bad = |what: &str| Error::SeriesError(format!("row {}: bad {what}", i + 1));
            let t: u32 = rec[0].parse().map_err(|_| bad("t"))?;
            let h: f64 = rec[1].parse().map_err(|_| bad("value"))?;
            let n: usize = if has_n {
                rec.get(2).ok_or_else(|| bad("n"))?.parse().map_err(|_| bad("n"))?
            } else {
                1
            };
            points.push((t, h, n));
        }
        Self::new(&points, cutoff)
    }

    pub fn read_csv(path: impl AsRef<Path>, cutoff: f64) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, cutoff).map_err(|e| match e {
            Error::SeriesError(m) => Error::SeriesError(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Mean per-feature HFR at each requested timestep (all manifest timesteps
/// when `timesteps` is `None`).
///
/// Per-feature HFRs are computed in parallel; each timestep's mean is a
/// pairwise reduction in manifest order, so the result does not depend on
/// the thread count. A zero-energy feature aborts the run.
pub fn average_hfr(manifest: &DatasetManifest, cutoff: f64, timesteps: Option<&[u32]>) -> Result<HfrCurve> {
    let mut grid: Vec<u32> = match timesteps {
        Some(ts) => ts.to_vec(),
        None => manifest.timesteps(),
    };
    grid.sort_unstable();
    grid.dedup();
    if grid.is_empty() {
        return Err(Error::EmptyTimestep("no timesteps to evaluate (empty manifest?)".into()));
    }

    let mut groups: Vec<(u32, Vec<&ManifestEntry>)> = Vec::with_capacity(grid.len());
    for &t in &grid {
        let entries: Vec<&ManifestEntry> = manifest.entries_at(t).collect();
        if entries.is_empty() {
            return Err(Error::EmptyTimestep(format!("timestep {t} has no manifest entries")));
        }
        groups.push((t, entries));
    }

    let mut evaluators: BTreeMap<(usize, usize), HfrEvaluator> = BTreeMap::new();
    for (_, entries) in &groups {
        for e in entries {
            let key = (e.shape.1, e.shape.2);
            if let std::collections::btree_map::Entry::Vacant(e) = evaluators.entry(key) {
                e.insert(HfrEvaluator::new(key.0, key.1, cutoff)?);
            }
        }
    }

    let jobs: Vec<&ManifestEntry> = groups.iter().flat_map(|(_, es)| es.iter().copied()).collect();
    let results: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|e| {
            let map = load_entry(e)?;
            evaluators[&(e.shape.1, e.shape.2)].hfr(&map).map_err(|err| match err {
                Error::ZeroEnergyFeature(_) => Error::ZeroEnergyFeature(format!(
                    "{} (image '{}', timestep {}) has zero energy",
                    e.resolved.display(),
                    e.meta.image_id,
                    e.meta.timestep
                )),
                other => other,
            })
        })
        .collect();
    let values = results.into_iter().collect::<Result<Vec<f64>>>()?;

    let mut points = Vec::with_capacity(groups.len());
    let mut offset = 0;
    for (t, entries) in &groups {
        let chunk = &values[offset..offset + entries.len()];
        offset += entries.len();
        let mean = pairwise_mean(chunk).expect("non-empty group");
        points.push((*t, mean, entries.len()));
    }
    HfrCurve::new(&points, cutoff)
}

/// Outcome of an argmax over an HFR curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub selected_t: u32,
    pub max_mean_hfr: f64,
    /// Timesteps within `tie_epsilon` of the maximum, ascending; includes
    /// the selected one.
    pub ties: Vec<u32>,
    pub cutoff: f64,
    pub curve: Vec<CurvePoint>,
    pub config: serde_json::Map<String, serde_json::Value>,
}

impl SelectionReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Pick the timestep with the highest mean HFR. Exact ties go to the
/// smallest timestep; values within `tie_epsilon` of the maximum are listed
/// in `ties` but do not change the choice.
pub fn select_timestep(curve: &HfrCurve, tie_epsilon: f64) -> Result<SelectionReport> {
    if curve.is_empty() {
        return Err(Error::EmptyCurve);
    }
    if !(tie_epsilon >= 0.0 && tie_epsilon.is_finite()) {
        return Err(Error::SeriesError(format!("tie epsilon {tie_epsilon} must be >= 0")));
    }
    let mut best = 0;
    for i in 1..curve.len() {
        if curve.mean_hfr[i] > curve.mean_hfr[best] {
            best = i;
        }
    }
    let max = curve.mean_hfr[best];
    let ties = (0..curve.len())
        .filter(|&i| max - curve.mean_hfr[i] <= tie_epsilon)
        .map(|i| curve.timesteps[i])
        .collect();
    let mut config = serde_json::Map::new();
    config.insert("cutoff".into(), curve.cutoff.into());
    config.insert("tie_epsilon".into(), tie_epsilon.into());
    Ok(SelectionReport {
        selected_t: curve.timesteps[best],
        max_mean_hfr: max,
        ties,
        cutoff: curve.cutoff,
        curve: curve.points(),
        config,
    })
}
