//! Timestep selection for diffusion features by high-frequency ratio.
//!
//! Given feature maps extracted at several diffusion timesteps, the crate
//! measures how much of each map's energy survives a Gaussian high-pass
//! filter (the high-frequency ratio, HFR), averages it over a dataset, and
//! picks the timestep with the largest mean. Supporting pieces cover the
//! NPY tensor format and dataset manifests, exact-size FFTs, a seeded
//! forward-noise simulator, a synthetic feature oracle, and label-based
//! checks (Fisher score, rank correlation).

pub mod cli;
pub mod diffusion;
pub mod discriminability;
pub mod error;
pub mod fft;
pub mod reduce;
pub mod selection;
pub mod spectral;
pub mod tensor_io;

pub use error::{Error, Result};
