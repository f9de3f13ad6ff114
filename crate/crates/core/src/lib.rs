//! Glare-resilient occupancy mapping from synthetic RGB-D streams.
//!
//! The pipeline renders corrupted depth ([`scenegen`]), scores each pixel's
//! trustworthiness ([`reliability`]), fuses the weighted evidence into an
//! occupancy grid ([`gridfusion`]) and scores the resulting costmaps against
//! geometric ground truth ([`evalsuite`]). [`baselines`] holds the comparison
//! preprocessors and [`harness`] runs whole experiments.

// Validation is written as `!(x > 0.0)` on purpose so that NaN fails it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod evalsuite;
pub mod frame;
pub mod gridfusion;
pub mod harness;
pub mod pnm;
pub mod reliability;
pub mod scenegen;

pub use error::{Error, Result};
pub use frame::{DepthFrame, ReliabilityMap, RgbFrame, Severity, SeverityMask, RANGE_MAX, RANGE_MIN};
