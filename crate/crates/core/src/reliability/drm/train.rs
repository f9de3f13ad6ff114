use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::frame::{DepthFrame, RgbFrame};
use crate::reliability::targets::{binary_target, soft_target, TargetMode};

use super::layers::Tensor;
use super::net::{DrmNet, DrmSchedule};
use super::{network_input, resample_nearest, temporal_diff, DrmModel};

fn default_momentum() -> f64 {
    0.9
}

fn default_warmup() -> usize {
    10
}

/// Update rule. `Sgd` is heavy-ball momentum `v = mu v + g; w -= lr v`;
/// `Adam` uses the usual bias-corrected moments with `beta = (0.9, 0.999)`
/// and `eps = 1e-8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default)]
    pub optimizer: Optimizer,
    pub batch_size: usize,
    pub epochs: usize,
    /// Leading epochs that descend the logistic loss on the same targets
    /// before switching to L1. From random weights, L1 through a sigmoid
    /// drives every output to the majority label and its gradient then
    /// vanishes; the warm-up separates the classes first.
    #[serde(default = "default_warmup")]
    pub warmup_epochs: usize,
    pub target_mode: TargetMode,
    /// `[width, height]`.
    pub working_resolution: [usize; 2],
    pub seed: u64,
    #[serde(default)]
    pub schedule: DrmSchedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-3,
            momentum: 0.9,
            optimizer: Optimizer::Adam,
            batch_size: 4,
            epochs: 30,
            warmup_epochs: default_warmup(),
            target_mode: TargetMode::Binary,
            working_resolution: [320, 240],
            seed: 0,
            schedule: DrmSchedule::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("momentum", "must lie in [0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if self.working_resolution.contains(&0) {
            return Err(Error::config("working_resolution", "must be nonzero"));
        }
        self.schedule.validate()
    }
}

/// One input/target pair at working resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    pub input: Tensor,
    pub target: Vec<f64>,
}

/// Mean absolute difference.
pub fn l1_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_shape((target.len(), 1), (pred.len(), 1))?;
    if pred.is_empty() {
        return Err(Error::Empty("loss over zero pixels".into()));
    }
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

/// Builds samples from a sequence of `(rgb, measured, reference)` frames;
/// each frame's temporal difference uses its predecessor in the slice.
pub fn build_samples(
    frames: &[(&RgbFrame, &DepthFrame, &DepthFrame)],
    mode: TargetMode,
    working: [usize; 2],
) -> Result<Vec<TrainSample>> {
    let mut out = Vec::with_capacity(frames.len());
    for (i, (rgb, depth, reference)) in frames.iter().enumerate() {
        let prev = (i > 0).then(|| frames[i - 1].1);
        let tdiff = temporal_diff(depth, prev)?;
        let input = network_input(rgb, depth, &tdiff, working)?;
        let t = match mode {
            TargetMode::Binary => binary_target(depth, reference)?,
            TargetMode::Soft => soft_target(depth, reference)?,
        };
        let (w, h) = depth.dims();
        let target = if [w, h] == working {
            t.values().to_vec()
        } else {
            resample_nearest(t.values(), w, h, working[0], working[1])
        };
        out.push(TrainSample { input, target });
    }
    Ok(out)
}

/// Mean L1 loss over every pixel of the batch and its exact gradient; ties
/// contribute a zero subgradient. Per-sample gradients are summed in batch
/// order.
pub fn batch_gradient(net: &DrmNet, batch: &[&TrainSample]) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Empty("gradient of an empty batch".into()));
    }
    let pixels: usize = batch.iter().map(|s| s.target.len()).sum();
    let scale = 1.0 / pixels as f64;
    let mut grad = vec![0.0; net.weights.len()];
    let mut loss = 0.0;
    for s in batch {
        let cache = net.forward(s.input.clone())?;
        check_shape((s.target.len(), 1), (cache.output.data.len(), 1))?;
        let mut d_out = cache.output.like();
        for ((g, &p), &t) in d_out.data.iter_mut().zip(&cache.output.data).zip(&s.target) {
            loss += (p - t).abs();
            *g = if p > t {
                scale
            } else if p < t {
                -scale
            } else {
                0.0
            };
        }
        for (a, b) in grad.iter_mut().zip(net.backward(&cache, &d_out)) {
            *a += b;
        }
    }
    Ok((loss * scale, grad))
}

/// Root mean square of every input channel over the training set. Depth
/// and its temporal difference are scaled by the range limit, so their
/// magnitudes sit one to two orders below the colour channels.
fn input_rms(samples: &[TrainSample]) -> Vec<f64> {
    let c = samples[0].input.c;
    let mut sq = vec![0.0; c];
    let mut n = 0usize;
    for s in samples {
        for (k, acc) in sq.iter_mut().enumerate() {
            *acc += s.input.channel(k).iter().map(|v| v * v).sum::<f64>();
        }
        n += s.input.plane();
    }
    sq.into_iter().map(|v| (v / n as f64).sqrt()).collect()
}

/// Logistic-loss gradient with respect to the logit, `(p - t) / n`, and
/// the batch's mean L1 loss for reporting.
fn warmup_gradient(net: &DrmNet, batch: &[&TrainSample]) -> Result<(f64, Vec<f64>)> {
    let pixels: usize = batch.iter().map(|s| s.target.len()).sum();
    let scale = 1.0 / pixels as f64;
    let mut grad = vec![0.0; net.weights.len()];
    let mut loss = 0.0;
    for s in batch {
        let cache = net.forward(s.input.clone())?;
        check_shape((s.target.len(), 1), (cache.output.data.len(), 1))?;
        let mut d_logit = cache.output.like();
        for ((g, &p), &t) in d_logit.data.iter_mut().zip(&cache.output.data).zip(&s.target) {
            loss += (p - t).abs();
            *g = (p - t) * scale;
        }
        for (a, b) in grad.iter_mut().zip(net.backward_logit(&cache, &d_logit)) {
            *a += b;
        }
    }
    Ok((loss * scale, grad))
}

/// A trained model with its loss history.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: DrmModel,
    /// Mean L1 loss: entry 0 before training, entry `e` over the batches of
    /// epoch `e`, warm-up epochs included.
    pub loss_curve: Vec<f64>,
}

fn dataset_loss(net: &DrmNet, samples: &[TrainSample]) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for s in samples {
        let out = net.predict(s.input.clone())?;
        sum += out.data.iter().zip(&s.target).map(|(p, t)| (p - t).abs()).sum::<f64>();
        n += s.target.len();
    }
    Ok(sum / n as f64)
}

/// Mini-batch descent over shuffled samples, logistic warm-up first and
/// mean L1 after. Deterministic given the samples
/// and the config; final weights are rounded to `f32` so a saved and
/// reloaded model is identical to the returned one.
pub fn drm_train(samples: &[TrainSample], cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Empty("training set has no samples".into()));
    }
    let mut net = DrmNet::init(cfg.schedule, cfg.seed);
    net.scale_stem_inputs(&input_rms(samples));
    net.zero_decoder_pointwise();
    let mut velocity = vec![0.0; net.weights.len()];
    let mut second = vec![0.0; net.weights.len()];
    let mut step = 0i32;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7EA1_D0C5);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut loss_curve = vec![dataset_loss(&net, samples)?];
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&TrainSample> = chunk.iter().map(|&i| &samples[i]).collect();
            let (loss, grad) = if epoch < cfg.warmup_epochs {
                warmup_gradient(&net, &batch)?
            } else {
                batch_gradient(&net, &batch)?
            };
            step += 1;
            match cfg.optimizer {
                Optimizer::Sgd => {
                    for ((w, v), g) in net.weights.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                        *v = cfg.momentum * *v + g;
                        *w -= cfg.learning_rate * *v;
                    }
                }
                Optimizer::Adam => {
                    const B1: f64 = 0.9;
                    const B2: f64 = 0.999;
                    let c1 = 1.0 - B1.powi(step);
                    let c2 = 1.0 - B2.powi(step);
                    for (((w, m), v), g) in net.weights.iter_mut().zip(velocity.iter_mut()).zip(second.iter_mut()).zip(&grad) {
                        *m = B1 * *m + (1.0 - B1) * g;
                        *v = B2 * *v + (1.0 - B2) * g * g;
                        *w -= cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + 1e-8);
                    }
                }
            }
            epoch_loss += loss;
            batches += 1;
        }
        loss_curve.push(epoch_loss / batches as f64);
    }
    for w in &mut net.weights {
        *w = *w as f32 as f64;
    }
    let model = DrmModel::new(net, cfg.seed, cfg.target_mode, cfg.working_resolution, cfg.epochs);
    Ok(TrainedModel { model, loss_curve })
}

/// Loss of a model over samples, for reporting.
pub fn evaluate_loss(model: &DrmModel, samples: &[TrainSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("no samples".into()));
    }
    dataset_loss(&model.net, samples)
}

/// Outcome of comparing analytic and central-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates skipped because `w +/- h` straddles a ReLU or L1 kink,
    /// where the central difference is not a derivative estimate.
    pub skipped_kinks: usize,
}

fn smoothness_signature(net: &DrmNet, s: &TrainSample) -> Result<Vec<bool>> {
    let cache = net.forward(s.input.clone())?;
    let mut sig = DrmNet::activation_pattern(&cache);
    sig.extend(cache.output.data.iter().zip(&s.target).map(|(p, t)| p > t));
    Ok(sig)
}

/// Central-difference check of `batch_gradient` over every weight.
/// Relative error uses `max(|analytic|, |numeric|, 1e-8)` as denominator.
#[allow(clippy::needless_range_loop)]
pub fn gradient_check(net: &DrmNet, batch: &[&TrainSample], h: f64) -> Result<GradCheck> {
    let (_, g) = batch_gradient(net, batch)?;
    let mut report = GradCheck {
        max_rel_error: 0.0,
        checked: 0,
        skipped_kinks: 0,
    };
    let mut probe = net.clone();
    for k in 0..net.weights.len() {
        probe.weights[k] = net.weights[k] + h;
        let lp = batch_gradient(&probe, batch)?.0;
        let sig_p: Vec<Vec<bool>> = batch.iter().map(|s| smoothness_signature(&probe, s)).collect::<Result<_>>()?;
        probe.weights[k] = net.weights[k] - h;
        let lm = batch_gradient(&probe, batch)?.0;
        let sig_m: Vec<Vec<bool>> = batch.iter().map(|s| smoothness_signature(&probe, s)).collect::<Result<_>>()?;
        probe.weights[k] = net.weights[k];
        if sig_p != sig_m {
            report.skipped_kinks += 1;
            continue;
        }
        let fd = (lp - lm) / (2.0 * h);
        let rel = (fd - g[k]).abs() / fd.abs().max(g[k].abs()).max(1e-8);
        report.max_rel_error = report.max_rel_error.max(rel);
        report.checked += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_sample(seed: u64, h: usize, w: usize) -> TrainSample {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut input = Tensor::zeros(5, h, w);
        input.data.iter_mut().for_each(|v| *v = rng.random::<f64>());
        let target = (0..h * w).map(|_| rng.random::<f64>()).collect();
        TrainSample { input, target }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let schedule = DrmSchedule { stem: 1, encoder: [1, 2, 2, 2] };
        assert!(schedule.param_counts().total <= 200);
        for seed in 0..4 {
            let net = DrmNet::init(schedule, seed);
            let s = toy_sample(seed + 10, 7, 9);
            let r = gradient_check(&net, &[&s], 1e-4).unwrap();
            assert!(r.max_rel_error < 1e-4, "seed {seed}: {r:?}");
            assert!(r.checked > r.skipped_kinks);
        }
    }

    #[test]
    fn gradient_holds_with_distinct_widths() {
        // distinct widths catch transposed channel indexing
        let net = DrmNet::init(DrmSchedule { stem: 3, encoder: [4, 5, 6, 7] }, 3);
        let s = toy_sample(21, 9, 11);
        let r = gradient_check(&net, &[&s], 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-4, "{r:?}");
    }

    #[test]
    fn duplicated_batch_keeps_gradient() {
        let net = DrmNet::init(DrmSchedule { stem: 2, encoder: [2, 3, 3, 4] }, 1);
        let s = toy_sample(2, 6, 6);
        let (_, g1) = batch_gradient(&net, &[&s]).unwrap();
        let (_, g2) = batch_gradient(&net, &[&s, &s]).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }
}
