//! Sensor-level, costmap-level and planner-proxy metrics.

mod gt;
mod metrics;
mod planner;

pub use gt::{gt_costmap, GroundTruthCostmap};
pub use metrics::{
    auprc, default_spike_threshold, depth_rmse, f1_at, for_metric, fsr_metric, hole_rate, pr_metrics, pr_metrics_map, spike_counts,
    spike_rate, squared_error, unknown_fraction, PrMetrics,
};
pub use planner::{astar, dijkstra, plan_path, trial_outcome, FailureReason, Path, StepCount, TrialOutcome, DETOUR_PLR};
