//! Noise schedules, the forward interpolation `z_t = α·ε + (1 − α)·z_0`,
//! seeded Gaussian noise, and a synthetic feature oracle.

mod oracle;
mod rng;
mod schedule;

pub use oracle::{oracle_feature, oracle_features, OracleConfig, OracleProfile, LOW_BAND_RADIUS};
pub use rng::NoiseStream;
pub use schedule::{linear_schedule, AlphaIndex, NoiseSchedule};

use crate::error::{Error, Result};
use crate::tensor_io::FeatureMap;

/// Forward process: `alpha·eps + (1 − alpha)·z0`, elementwise. Metadata is
/// taken from `z0`.
pub fn forward_noise(z0: &FeatureMap, eps: &FeatureMap, alpha: f64) -> Result<FeatureMap> {
    if z0.shape() != eps.shape() {
        return Err(Error::ShapeMismatch(format!(
            "z0 is {:?}, noise is {:?}",
            z0.shape(),
            eps.shape()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::ScheduleError(format!("alpha {alpha} outside [0, 1]")));
    }
    let keep = 1.0 - alpha;
    let values = z0
        .values()
        .iter()
        .zip(eps.values())
        .map(|(&z, &e)| alpha * e + keep * z)
        .collect();
    let (c, h, w) = z0.shape();
    Ok(FeatureMap::new(c, h, w, values)?.with_meta(z0.meta.clone()))
}

/// I.i.d. standard normal map of the given `(channels, height, width)`
/// drawn from the stream of `seed`.
pub fn sample_noise(shape: (usize, usize, usize), seed: u64) -> Result<FeatureMap> {
    noise_from(NoiseStream::new(seed), shape)
}

/// Noise for one `(image, timestep)` cell. Cells are independent, so they
/// can be generated in any order or in parallel.
pub fn sample_noise_keyed(shape: (usize, usize, usize), seed: u64, image: u64, timestep: u64) -> Result<FeatureMap> {
    noise_from(NoiseStream::keyed(seed, image, timestep), shape)
}

fn noise_from(stream: NoiseStream, (c, h, w): (usize, usize, usize)) -> Result<FeatureMap> {
    FeatureMap::new(c, h, w, stream.normals(c * h * w))
}
