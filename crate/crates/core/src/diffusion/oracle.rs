//! Synthetic feature generator with a known best timestep.
//!
//! For image `i` and timestep `t` the generator
//!
//! 1. draws a clean latent `z0`: a sum of random sinusoids whose signed
//!    frequencies lie within [`LOW_BAND_RADIUS`] bins on both axes;
//! 2. simulates the noisy sample `z_t = α·ε + (1 − α)·z0` with `α` from the
//!    schedule and `ε` keyed by `(seed, i, t)`;
//! 3. stands in for a feature extractor: keeps only the low band of `z_t`,
//!    rescales it to RMS `base_low_freq_amplitude`, and adds a diagonal
//!    cosine at `detail_frequency` bins with amplitude
//!    `detail_amplitude_curve[t]` and a per-image, per-channel phase.
//!
//! The detail sits far above the low band, so the dataset-mean HFR rises and
//! falls with the amplitude curve and peaks at `peak_timestep`.

use std::f64::consts::TAU;
use std::path::Path;

use rayon::prelude::*;

use super::rng::NoiseStream;
use super::schedule::{AlphaIndex, NoiseSchedule};
use super::{forward_noise, sample_noise_keyed};
use crate::error::{Error, Result};
use crate::fft::Fft2Plan;
use crate::spectral::energy;
use crate::tensor_io::{load_manifest, write_tensor, DatasetManifest, Dtype, FeatureMap, FeatureMeta, ManifestEntry};

/// Largest signed frequency (per axis) kept in the low band.
pub const LOW_BAND_RADIUS: usize = 2;

/// Word offsets within an image's latent stream for the latent phases and
/// the detail phases; amplitudes use the normals at the start of the stream.
const LATENT_PHASE_WORDS: u64 = 1 << 32;
const PHASE_WORDS: u64 = 1 << 40;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleProfile {
    pub peak_timestep: u32,
    pub base_low_freq_amplitude: f64,
    /// Detail amplitude for `t = 1..=T` (index `t − 1`).
    pub detail_amplitude_curve: Vec<f64>,
    pub detail_frequency: usize,
}

impl OracleProfile {
    /// Gaussian bump `peak_amplitude·exp(−(t − peak)²/(2·width²))`.
    pub fn unimodal(
        total_timesteps: u32,
        peak_timestep: u32,
        width: f64,
        base_low_freq_amplitude: f64,
        peak_amplitude: f64,
        detail_frequency: usize,
    ) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::ProfileInvalid(format!("bump width {width} must be > 0")));
        }
        let curve = (1..=total_timesteps)
            .map(|t| {
                let d = (t as f64 - peak_timestep as f64) / width;
                peak_amplitude * (-0.5 * d * d).exp()
            })
            .collect();
        let p = OracleProfile {
            peak_timestep,
            base_low_freq_amplitude,
            detail_amplitude_curve: curve,
            detail_frequency,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn total_timesteps(&self) -> u32 {
        self.detail_amplitude_curve.len() as u32
    }

    /// Check the profile. An all-zero curve is accepted as the null profile;
    /// otherwise the maximum must be attained only at `peak_timestep`.
    pub fn validate(&self) -> Result<()> {
        let t_max = self.total_timesteps();
        if t_max == 0 {
            return Err(Error::ProfileInvalid("empty amplitude curve".into()));
        }
        if !(self.base_low_freq_amplitude > 0.0 && self.base_low_freq_amplitude.is_finite()) {
            return Err(Error::ProfileInvalid("base amplitude must be > 0".into()));
        }
        if self.peak_timestep == 0 || self.peak_timestep > t_max {
            return Err(Error::ProfileInvalid(format!(
                "peak timestep {} outside [1, {t_max}]",
                self.peak_timestep
            )));
        }
        if self.detail_frequency == 0 {
            return Err(Error::ProfileInvalid("detail frequency must be >= 1".into()));
        }
        if self
            .detail_amplitude_curve
            .iter()
            .any(|a| !(a.is_finite() && *a >= 0.0))
        {
            return Err(Error::ProfileInvalid("amplitudes must be finite and >= 0".into()));
        }
        let max = self.detail_amplitude_curve.iter().cloned().fold(0.0, f64::max);
        if max > 0.0 {
            let argmaxes: Vec<u32> = (1..=t_max)
                .filter(|&t| self.detail_amplitude_curve[t as usize - 1] == max)
                .collect();
            if argmaxes != [self.peak_timestep] {
                return Err(Error::ProfileInvalid(format!(
                    "curve maximum attained at {argmaxes:?}, expected only {}",
                    self.peak_timestep
                )));
            }
        }
        Ok(())
    }

    fn amplitude(&self, t: u32) -> f64 {
        self.detail_amplitude_curve[t as usize - 1]
    }
}

/// Dataset layout for [`oracle_features`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub n_images: usize,
    /// `(channels, height, width)`.
    pub shape: (usize, usize, usize),
    pub seed: u64,
    pub timesteps: Vec<u32>,
    pub alpha_index: AlphaIndex,
    pub dtype: Dtype,
}

fn check(profile: &OracleProfile, schedule: &NoiseSchedule, cfg: &OracleConfig) -> Result<()> {
    profile.validate()?;
    if profile.total_timesteps() != schedule.total_timesteps() {
        return Err(Error::ProfileInvalid(format!(
            "profile covers {} timesteps, schedule {}",
            profile.total_timesteps(),
            schedule.total_timesteps()
        )));
    }
    let (c, h, w) = cfg.shape;
    if c == 0 || h == 0 || w == 0 {
        return Err(Error::ShapeMismatch(format!("bad oracle shape {:?}", cfg.shape)));
    }
    let limit = h.min(w) as f64 / 2.0;
    if profile.detail_frequency as f64 >= limit {
        return Err(Error::FrequencyTooHigh {
            freq: profile.detail_frequency,
            limit,
        });
    }
    if let Some(&t) = cfg
        .timesteps
        .iter()
        .find(|&&t| t == 0 || t > schedule.total_timesteps())
    {
        return Err(Error::ScheduleError(format!(
            "timestep {t} outside [1, {}]",
            schedule.total_timesteps()
        )));
    }
    Ok(())
}

fn signed_freq(k: usize, n: usize) -> usize {
    if k <= n / 2 {
        k
    } else {
        n - k
    }
}

fn clean_latent(cfg: &OracleConfig, image: u64) -> Result<FeatureMap> {
    let (c, h, w) = cfg.shape;
    let stream = NoiseStream::keyed(cfg.seed, image, 0);
    let r = LOW_BAND_RADIUS as i64;
    let mut values = vec![0.0; c * h * w];
    let mut counter = 0u64;
    for ch in 0..c {
        let plane = &mut values[ch * h * w..(ch + 1) * h * w];
        for ku in 0..=r {
            for kv in -r..=r {
                let amp = stream.normal(counter);
                let phase = TAU * stream.uniform(LATENT_PHASE_WORDS + counter);
                counter += 1;
                for y in 0..h {
                    for x in 0..w {
                        let arg = TAU * (ku as f64 * y as f64 / h as f64 + kv as f64 * x as f64 / w as f64);
                        plane[y * w + x] += amp * (arg + phase).cos();
                    }
                }
            }
        }
    }
    FeatureMap::new(c, h, w, values)
}

/// Keep signed frequencies within the low band on both axes, then rescale
/// to RMS `target_rms`.
fn low_band(map: &FeatureMap, target_rms: f64) -> Result<Vec<f64>> {
    let (_, h, w) = map.shape();
    let plan = Fft2Plan::new(h, w)?;
    let mut out = Vec::with_capacity(map.values().len());
    for ch in map.channel_iter() {
        let mut data = plan.forward_real(ch)?.into_values();
        for u in 0..h {
            for v in 0..w {
                if signed_freq(u, h) > LOW_BAND_RADIUS || signed_freq(v, w) > LOW_BAND_RADIUS {
                    data[u * w + v] = Default::default();
                }
            }
        }
        plan.inverse(&mut data);
        out.extend(data.iter().map(|z| z.re));
    }
    let (c, _, _) = map.shape();
    let e = energy(&FeatureMap::new(c, h, w, out.clone())?);
    let rms = (e / out.len() as f64).sqrt();
    if rms > 0.0 {
        let s = target_rms / rms;
        out.iter_mut().for_each(|v| *v *= s);
    }
    Ok(out)
}

/// One synthetic feature map for `(image, t)`.
pub fn oracle_feature(
    profile: &OracleProfile,
    schedule: &NoiseSchedule,
    cfg: &OracleConfig,
    image: usize,
    t: u32,
) -> Result<FeatureMap> {
    check(profile, schedule, cfg)?;
    let z0 = clean_latent(cfg, image as u64)?;
    feature_unchecked(profile, schedule, cfg, &z0, image, t)
}

fn feature_unchecked(
    profile: &OracleProfile,
    schedule: &NoiseSchedule,
    cfg: &OracleConfig,
    z0: &FeatureMap,
    image: usize,
    t: u32,
) -> Result<FeatureMap> {
    let (c, h, w) = cfg.shape;
    let eps = sample_noise_keyed(cfg.shape, cfg.seed, image as u64, t as u64)?;
    let alpha = schedule.alpha_for(t, cfg.alpha_index)?;
    let zt = forward_noise(z0, &eps, alpha)?;
    let mut values = low_band(&zt, profile.base_low_freq_amplitude)?;

    let amp = profile.amplitude(t);
    if amp > 0.0 {
        let f = profile.detail_frequency as f64;
        let phases = NoiseStream::keyed(cfg.seed, image as u64, 0);
        for ch in 0..c {
            let phase = TAU * phases.uniform(PHASE_WORDS + ch as u64);
            let plane = &mut values[ch * h * w..(ch + 1) * h * w];
            for y in 0..h {
                for x in 0..w {
                    let arg = TAU * f * (y as f64 / h as f64 + x as f64 / w as f64);
                    plane[y * w + x] += amp * (arg + phase).cos();
                }
            }
        }
    }
    Ok(FeatureMap::new(c, h, w, values)?.with_meta(FeatureMeta {
        image_id: format!("img{image:04}"),
        timestep: t,
        group: "oracle".into(),
        dtype: cfg.dtype,
    }))
}

/// Write the synthetic dataset into `out_dir` (tensor files plus
/// `manifest.json`) and return the loaded manifest. Entries are ordered by
/// timestep, then image.
pub fn oracle_features(
    profile: &OracleProfile,
    schedule: &NoiseSchedule,
    cfg: &OracleConfig,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest> {
    check(profile, schedule, cfg)?;
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let latents = (0..cfg.n_images)
        .into_par_iter()
        .map(|i| clean_latent(cfg, i as u64))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(u32, usize)> = cfg
        .timesteps
        .iter()
        .flat_map(|&t| (0..cfg.n_images).map(move |i| (t, i)))
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&(t, i)| {
            let map = feature_unchecked(profile, schedule, cfg, &latents[i], i, t)?;
            let name = format!("img{i:04}_t{t:04}.npy");
            let resolved = out_dir.join(&name);
            write_tensor(&map, &resolved, cfg.dtype)?;
            Ok(ManifestEntry::planned(name, resolved, map.meta.clone(), cfg.shape))
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = DatasetManifest {
        total_timesteps: schedule.total_timesteps(),
        allow_ragged: false,
        entries,
    };
    let path = out_dir.join("manifest.json");
    manifest.write(&path)?;
    load_manifest(path)
}
