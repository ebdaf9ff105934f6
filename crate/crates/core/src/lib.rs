//! Slice curation and adaptive slice sampling for volumetric scans.
//!
//! Given a stack of grayscale slices, the pipeline is: curate slices by
//! lung-area fraction, compute a per-slice GLCM entropy profile, smooth
//! it with a Savitzky-Golay filter, turn the absolute derivative into a
//! CDF, and inverse-sample that CDF to pick the slices where texture
//! changes fastest. Center-focused and uniform baseline samplers and the
//! usual binary classification metrics round out the toolkit.

pub mod cli;
pub mod curation;
pub mod error;
pub mod glcm;
pub mod metrics;
pub mod plot;
pub mod sampler;
pub mod smoothing;
pub mod volume;

pub use error::{Error, Result};
pub use glcm::{EntropyProfile, Glcm, GlcmConfig, RangeMode};
pub use sampler::{SamplingConfig, SamplingPlan, Strategy};
pub use smoothing::SgConfig;
pub use volume::Volume;
