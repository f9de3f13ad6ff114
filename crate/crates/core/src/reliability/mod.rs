//! Reference depth, supervision targets and per-pixel reliability
//! estimators (hand-built and learned).

pub mod drm;
mod heuristic;
mod targets;

pub use heuristic::{heuristic_reliability, heuristic_reliability_with, saturation_factor, HeuristicParams};
pub use targets::{
    binary_target, drm_loss, epsilon, reference_depth, sigma, soft_target, ReliabilityTarget, TargetMode,
};
pub(crate) use targets::lower_median;
