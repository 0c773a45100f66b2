//! Gaussian high-pass filtering, high/low decomposition, feature energy and
//! the high-frequency ratio (HFR).
//!
//! Every channel is transformed independently. The HFR of a map is a single
//! scalar: filtered and unfiltered energies are summed over all channels
//! before the ratio is formed.

use crate::error::{Error, Result};
use crate::fft::{fftshift, ifftshift, Complex64, Fft2Plan};
use crate::reduce::pairwise_sum;
use crate::tensor_io::FeatureMap;

/// Cutoff used when none is given.
pub const DEFAULT_CUTOFF: f64 = 30.0;

/// Gaussian high-pass gains `1 − exp(−D²/(2·D0²))`, where `D` is the bin
/// distance from the centred DC bin `(⌊H/2⌋, ⌊W/2⌋)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HighPassMask {
    height: usize,
    width: usize,
    cutoff: f64,
    /// Centred (fftshift) layout.
    gains: Vec<f64>,
    /// Natural FFT layout, symmetrized under `(u,v) ↦ (−u,−v) mod (H,W)`.
    unshifted: Vec<f64>,
}

impl HighPassMask {
    pub fn gaussian(height: usize, width: usize, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::NonPositiveCutoff(cutoff));
        }
        if height == 0 || width == 0 {
            return Err(Error::SizeZero);
        }
        let (ch, cw) = ((height / 2) as f64, (width / 2) as f64);
        let denom = 2.0 * cutoff * cutoff;
        let mut centred = Vec::with_capacity(height * width);
        for u in 0..height {
            for v in 0..width {
                let du = u as f64 - ch;
                let dv = v as f64 - cw;
                centred.push(1.0 - (-(du * du + dv * dv) / denom).exp());
            }
        }
        let raw = ifftshift(&centred, height, width);
        let mut unshifted = raw.clone();
        for u in 0..height {
            for v in 0..width {
                let mirror = ((height - u) % height) * width + (width - v) % width;
                unshifted[u * width + v] = 0.5 * (raw[u * width + v] + raw[mirror]);
            }
        }
        let gains = fftshift(&unshifted, height, width);
        Ok(HighPassMask {
            height,
            width,
            cutoff,
            gains,
            unshifted,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Gains in centred layout, row-major.
    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// Gain at centred position `(u, v)`.
    pub fn gain(&self, u: usize, v: usize) -> f64 {
        self.gains[u * self.width + v]
    }

    /// Gains aligned with an unshifted spectrum.
    pub fn unshifted(&self) -> &[f64] {
        &self.unshifted
    }

    /// Mean of squared gains; the expected HFR of white noise.
    pub fn mean_squared_gain(&self) -> f64 {
        let sq: Vec<f64> = self.gains.iter().map(|g| g * g).collect();
        pairwise_sum(&sq) / sq.len() as f64
    }
}

/// Build the Gaussian high-pass mask for a `height × width` grid.
pub fn gaussian_highpass_mask(height: usize, width: usize, cutoff: f64) -> Result<HighPassMask> {
    HighPassMask::gaussian(height, width, cutoff)
}

/// High- and low-frequency parts of a feature map; `low = original − high`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub high: FeatureMap,
    pub low: FeatureMap,
}

fn check_dims(map: &FeatureMap, mask: &HighPassMask) -> Result<()> {
    if (map.height(), map.width()) != (mask.height, mask.width) {
        return Err(Error::DimMismatch(format!(
            "map is {}x{}, mask is {}x{}",
            map.height(),
            map.width(),
            mask.height,
            mask.width
        )));
    }
    Ok(())
}

/// Filtered spatial planes per channel, before the real part is taken.
fn filtered_planes(map: &FeatureMap, mask: &HighPassMask) -> Result<Vec<Vec<Complex64>>> {
    check_dims(map, mask)?;
    let plan = Fft2Plan::new(map.height(), map.width())?;
    map.channel_iter()
        .map(|ch| {
            let mut data = plan.forward_real(ch)?.into_values();
            for (z, &g) in data.iter_mut().zip(mask.unshifted()) {
                *z *= g;
            }
            plan.inverse(&mut data);
            Ok(data)
        })
        .collect()
}

/// Spatial high-frequency component: per channel, the real part of
/// `ifft2(ifftshift(mask) ⊙ fft2(channel))`. Metadata is copied.
pub fn extract_high_freq(map: &FeatureMap, mask: &HighPassMask) -> Result<FeatureMap> {
    let planes = filtered_planes(map, mask)?;
    let values = planes.into_iter().flatten().map(|z| z.re).collect();
    let (c, h, w) = map.shape();
    Ok(FeatureMap::new(c, h, w, values)?.with_meta(map.meta.clone()))
}

/// Energy of the imaginary parts discarded by [`extract_high_freq`],
/// relative to the map's energy. Zero up to round-off for a symmetric mask.
pub fn imaginary_residue(map: &FeatureMap, mask: &HighPassMask) -> Result<f64> {
    let planes = filtered_planes(map, mask)?;
    let im: Vec<f64> = planes.iter().flatten().map(|z| z.im * z.im).collect();
    let e = energy(map);
    Ok(if e > 0.0 { pairwise_sum(&im) / e } else { pairwise_sum(&im) })
}

/// Split `map` into high- and low-frequency parts.
pub fn decompose(map: &FeatureMap, mask: &HighPassMask) -> Result<Decomposition> {
    let high = extract_high_freq(map, mask)?;
    let low_values = map
        .values()
        .iter()
        .zip(high.values())
        .map(|(o, h)| o - h)
        .collect();
    let (c, h, w) = map.shape();
    let low = FeatureMap::new(c, h, w, low_values)?.with_meta(map.meta.clone());
    Ok(Decomposition { high, low })
}

/// Sum of squared values over every channel and pixel.
pub fn energy(map: &FeatureMap) -> f64 {
    let sq: Vec<f64> = map.values().iter().map(|v| v * v).collect();
    pairwise_sum(&sq)
}

/// Reusable HFR evaluator for one grid size and cutoff.
#[derive(Debug, Clone)]
pub struct HfrEvaluator {
    mask: HighPassMask,
    plan: Fft2Plan,
}

/// Filtered and total spectral energy of one channel or map.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SpectralEnergy {
    high: f64,
    total: f64,
}

impl HfrEvaluator {
    pub fn new(height: usize, width: usize, cutoff: f64) -> Result<Self> {
        Ok(HfrEvaluator {
            mask: HighPassMask::gaussian(height, width, cutoff)?,
            plan: Fft2Plan::new(height, width)?,
        })
    }

    pub fn from_mask(mask: HighPassMask) -> Result<Self> {
        let plan = Fft2Plan::new(mask.height, mask.width)?;
        Ok(HfrEvaluator { mask, plan })
    }

    pub fn mask(&self) -> &HighPassMask {
        &self.mask
    }

    fn channel_terms(&self, channel: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let spectrum = self.plan.forward_real(channel)?;
        let total: Vec<f64> = spectrum.values().iter().map(|z| z.norm_sqr()).collect();
        let high = total
            .iter()
            .zip(self.mask.unshifted())
            .map(|(p, g)| g * g * p)
            .collect();
        Ok((high, total))
    }

    fn spectral_energy(&self, map: &FeatureMap) -> Result<SpectralEnergy> {
        check_dims(map, &self.mask)?;
        let mut high = Vec::with_capacity(map.values().len());
        let mut total = Vec::with_capacity(map.values().len());
        for ch in map.channel_iter() {
            let (h, t) = self.channel_terms(ch)?;
            high.extend(h);
            total.extend(t);
        }
        Ok(SpectralEnergy {
            high: pairwise_sum(&high),
            total: pairwise_sum(&total),
        })
    }

    /// HFR computed in the frequency domain:
    /// `Σ gain²·|F|² / Σ |F|²` over all channels and bins.
    pub fn hfr(&self, map: &FeatureMap) -> Result<f64> {
        if map.values().iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroEnergyFeature(describe(map)));
        }
        let e = self.spectral_energy(map)?;
        if e.total <= 0.0 {
            return Err(Error::ZeroEnergyFeature(describe(map)));
        }
        Ok(e.high / e.total)
    }

    /// HFR of each channel separately; `None` for an all-zero channel.
    pub fn hfr_per_channel(&self, map: &FeatureMap) -> Result<Vec<Option<f64>>> {
        check_dims(map, &self.mask)?;
        map.channel_iter()
            .map(|ch| {
                let (h, t) = self.channel_terms(ch)?;
                let total = pairwise_sum(&t);
                Ok((total > 0.0).then(|| pairwise_sum(&h) / total))
            })
            .collect()
    }
}

fn describe(map: &FeatureMap) -> String {
    if map.meta.image_id.is_empty() {
        format!("all-zero feature map of shape {:?}", map.shape())
    } else {
        format!(
            "feature '{}' at timestep {} is all zeros",
            map.meta.image_id, map.meta.timestep
        )
    }
}

/// High-frequency ratio `E(high)/E(map)` of a feature map with Gaussian
/// cutoff `cutoff`.
pub fn hfr(map: &FeatureMap, cutoff: f64) -> Result<f64> {
    HfrEvaluator::new(map.height(), map.width(), cutoff)?.hfr(map)
}

/// Diagnostic per-channel HFR.
pub fn hfr_per_channel(map: &FeatureMap, cutoff: f64) -> Result<Vec<Option<f64>>> {
    HfrEvaluator::new(map.height(), map.width(), cutoff)?.hfr_per_channel(map)
}
