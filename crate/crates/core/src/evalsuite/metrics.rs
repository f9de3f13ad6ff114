use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::frame::{DepthFrame, ReliabilityMap};
use crate::gridfusion::{CellState, Costmap};

use super::gt::GroundTruthCostmap;

/// Fraction of pixels without a valid in-range depth.
pub fn hole_rate(depth: &DepthFrame) -> f64 {
    if depth.is_empty() {
        return 0.0;
    }
    1.0 - depth.valid_count() as f64 / depth.len() as f64
}

/// Default outlier threshold `max(0.1, 0.05 d*)`.
pub fn default_spike_threshold(reference: f64) -> f64 {
    (0.05 * reference).max(0.1)
}

/// Counts `(spikes, jointly valid)` pixels under a threshold function.
pub fn spike_counts(depth: &DepthFrame, reference: &DepthFrame, delta: impl Fn(f64) -> f64) -> Result<(usize, usize)> {
    check_shape(reference.dims(), depth.dims())?;
    let mut spikes = 0;
    let mut n = 0;
    for i in 0..depth.len() {
        if let (Some(d), Some(r)) = (depth.get(i), reference.get(i)) {
            n += 1;
            if (d - r).abs() > delta(r) {
                spikes += 1;
            }
        }
    }
    Ok((spikes, n))
}

/// Spike fraction among jointly valid pixels; 0 when there are none.
pub fn spike_rate(depth: &DepthFrame, reference: &DepthFrame) -> Result<f64> {
    let (s, n) = spike_counts(depth, reference, default_spike_threshold)?;
    Ok(if n == 0 { 0.0 } else { s as f64 / n as f64 })
}

/// `(sum of squared error, count)` over jointly valid pixels.
pub fn squared_error(depth: &DepthFrame, reference: &DepthFrame) -> Result<(f64, usize)> {
    check_shape(reference.dims(), depth.dims())?;
    let mut sum = 0.0;
    let mut n = 0;
    for i in 0..depth.len() {
        if let (Some(d), Some(r)) = (depth.get(i), reference.get(i)) {
            sum += (d - r) * (d - r);
            n += 1;
        }
    }
    Ok((sum, n))
}

pub fn depth_rmse(depth: &DepthFrame, reference: &DepthFrame) -> Result<f64> {
    let (sum, n) = squared_error(depth, reference)?;
    if n == 0 {
        return Err(Error::Empty("no jointly valid pixels for RMSE".into()));
    }
    Ok((sum / n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrMetrics {
    /// `None` when the labels hold a single class.
    pub auprc: Option<f64>,
    pub f1: f64,
    pub threshold: f64,
}

/// Step-wise area under the precision-recall curve with "reliable" as the
/// positive class. Each distinct score is one threshold; equal scores enter
/// together.
pub fn auprc(scores: &[f64], labels: &[bool]) -> Result<Option<f64>> {
    check_shape((labels.len(), 1), (scores.len(), 1))?;
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / positives as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(Some(area))
}

/// F1 of the rule `score > threshold`; 0 when there is nothing to score.
pub fn f1_at(scores: &[f64], labels: &[bool], threshold: f64) -> Result<f64> {
    check_shape((labels.len(), 1), (scores.len(), 1))?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s > threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let denom = 2 * tp + fp + fn_;
    Ok(if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 })
}

/// AUPRC and F1 of a predicted map against binary labels.
pub fn pr_metrics(scores: &[f64], labels: &[bool], threshold: f64) -> Result<PrMetrics> {
    Ok(PrMetrics {
        auprc: auprc(scores, labels)?,
        f1: f1_at(scores, labels, threshold)?,
        threshold,
    })
}

pub fn pr_metrics_map(pred: &ReliabilityMap, labels: &[bool], threshold: f64) -> Result<PrMetrics> {
    pr_metrics(pred.values(), labels, threshold)
}

fn gt_fraction(predicted: &Costmap, gt: &GroundTruthCostmap, state: CellState) -> Result<f64> {
    gt.check_spec(&predicted.spec)?;
    let free = gt.free_count();
    if free == 0 {
        return Err(Error::Empty("ground truth has no free cells".into()));
    }
    let hits = predicted
        .states()
        .iter()
        .zip(gt.free())
        .filter(|(&s, &f)| f && s == state)
        .count();
    Ok(hits as f64 / free as f64)
}

/// Share of ground-truth free cells predicted occupied.
pub fn for_metric(predicted: &Costmap, gt: &GroundTruthCostmap) -> Result<f64> {
    gt_fraction(predicted, gt, CellState::Occupied)
}

/// Share of ground-truth free cells predicted free.
pub fn fsr_metric(predicted: &Costmap, gt: &GroundTruthCostmap) -> Result<f64> {
    gt_fraction(predicted, gt, CellState::Free)
}

/// Share of ground-truth free cells left unknown.
pub fn unknown_fraction(predicted: &Costmap, gt: &GroundTruthCostmap) -> Result<f64> {
    gt_fraction(predicted, gt, CellState::Unknown)
}
