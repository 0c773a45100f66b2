use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// On-disk element type. Values are always held as `f64` in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn descr(self) -> &'static str {
        match self {
            Dtype::F32 => "<f4",
            Dtype::F64 => "<f8",
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

/// Where a feature map came from.
///
/// A timestep of `0` means "not assigned"; maps loaded through a manifest
/// always carry a timestep in `[1, T]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMeta {
    pub image_id: String,
    pub timestep: u32,
    pub group: String,
    pub dtype: Dtype,
}

impl Default for FeatureMeta {
    fn default() -> Self {
        FeatureMeta {
            image_id: String::new(),
            timestep: 0,
            group: String::new(),
            dtype: Dtype::F64,
        }
    }
}

/// A real feature tensor of shape `(channels, height, width)` stored
/// channel-major, then row, then column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f64>,
    pub meta: FeatureMeta,
}

impl FeatureMap {
    /// Build a map, checking dimensions and finiteness.
    pub fn new(channels: usize, height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::ShapeMismatch(format!(
                "dimensions must be >= 1, got ({channels}, {height}, {width})"
            )));
        }
        let expected = channels
            .checked_mul(height)
            .and_then(|n| n.checked_mul(width))
            .ok_or_else(|| Error::ShapeMismatch("shape overflows usize".into()))?;
        if values.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "({channels}, {height}, {width}) needs {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(format!(
                "value {} at flat index {i}",
                values[i]
            )));
        }
        Ok(FeatureMap {
            channels,
            height,
            width,
            values,
            meta: FeatureMeta::default(),
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self> {
        Self::new(channels, height, width, vec![0.0; channels * height * width])
    }

    pub fn with_meta(mut self, meta: FeatureMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Values of one channel, row-major.
    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn channel_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.plane_len())
    }

    /// Value at `(c, h, w)`.
    pub fn get(&self, c: usize, h: usize, w: usize) -> f64 {
        self.values[(c * self.height + h) * self.width + w]
    }

    /// Apply `f` elementwise, keeping shape and metadata. Fails if `f`
    /// produces a non-finite value.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Ok(Self::new(self.channels, self.height, self.width, values)?.with_meta(self.meta.clone()))
    }

    /// Flatten back to a token matrix of shape `(height·width, channels)`,
    /// row-major. Inverse of [`reshape_tokens`].
    pub fn to_tokens(&self) -> Vec<f64> {
        let n = self.plane_len();
        let mut out = vec![0.0; n * self.channels];
        for c in 0..self.channels {
            for (p, &v) in self.channel(c).iter().enumerate() {
                out[p * self.channels + c] = v;
            }
        }
        out
    }
}

/// Arrange a token matrix `(n_tokens × dim)` (row-major) onto a
/// `height × width` grid: token `h·width + w` becomes the pixel `(h, w)`
/// and its `dim` entries become channels.
pub fn reshape_tokens(tokens: &[f64], dim: usize, height: usize, width: usize) -> Result<FeatureMap> {
    if dim == 0 || !tokens.len().is_multiple_of(dim) {
        return Err(Error::ShapeMismatch(format!(
            "{} values do not form rows of width {dim}",
            tokens.len()
        )));
    }
    let n_tokens = tokens.len() / dim;
    if n_tokens != height * width {
        return Err(Error::ShapeMismatch(format!(
            "{n_tokens} tokens cannot fill a {height}x{width} grid"
        )));
    }
    let plane = height * width;
    let mut values = vec![0.0; tokens.len()];
    for (p, row) in tokens.chunks_exact(dim).enumerate() {
        for (c, &v) in row.iter().enumerate() {
            values[c * plane + p] = v;
        }
    }
    FeatureMap::new(dim, height, width, values)
}
