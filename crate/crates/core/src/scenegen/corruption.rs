use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::frame::{DepthFrame, Severity, SeverityMask};

use super::render::{mix64, NO_SURFACE};

/// Measurement-failure model, indexed by severity level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionParams {
    pub hole_prob: [f64; 3],
    pub spike_prob: [f64; 3],
    /// Spike bias bounds `[lo, hi]` in meters, `0 < lo <= hi`.
    pub spike_bias_range: [f64; 2],
    /// Noise standard deviation is `noise_coeff * d^2`.
    pub noise_coeff: f64,
    pub seed: u64,
    /// When set and a surface map is supplied, spikes on glare surfaces take
    /// a bias fixed per surface tile instead of a fresh per-pixel draw.
    #[serde(default = "yes")]
    pub surface_anchored_bias: bool,
}

fn yes() -> bool {
    true
}

impl Default for CorruptionParams {
    fn default() -> Self {
        Self {
            hole_prob: [0.01, 0.20, 0.45],
            spike_prob: [0.003, 0.10, 0.30],
            spike_bias_range: [0.5, 3.0],
            noise_coeff: 0.001,
            seed: 0,
            surface_anchored_bias: true,
        }
    }
}

impl CorruptionParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        for l in 0..3 {
            if !unit(self.hole_prob[l]) {
                return Err(Error::config(format!("hole_prob[{l}]"), "must lie in [0, 1]"));
            }
            if !unit(self.spike_prob[l]) {
                return Err(Error::config(format!("spike_prob[{l}]"), "must lie in [0, 1]"));
            }
            if self.hole_prob[l] + self.spike_prob[l] > 1.0 {
                return Err(Error::config(format!("spike_prob[{l}]"), "hole and spike probabilities sum above 1"));
            }
        }
        for l in 1..3 {
            if self.hole_prob[l] < self.hole_prob[l - 1] {
                return Err(Error::config(format!("hole_prob[{l}]"), "must not decrease with severity"));
            }
            if self.spike_prob[l] < self.spike_prob[l - 1] {
                return Err(Error::config(format!("spike_prob[{l}]"), "must not decrease with severity"));
            }
        }
        let [lo, hi] = self.spike_bias_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::config("spike_bias_range", "needs 0 < lo <= hi"));
        }
        if !(self.noise_coeff >= 0.0 && self.noise_coeff.is_finite()) {
            return Err(Error::config("noise_coeff", "must be non-negative"));
        }
        Ok(())
    }

    fn anchored_bias(&self, surface: u64) -> f64 {
        let [lo, hi] = self.spike_bias_range;
        let unit = (mix64(self.seed ^ mix64(surface)) >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * unit
    }
}

/// What happened to each pixel during corruption.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelFate {
    Clean,
    Hole,
    Spike,
}

/// Corrupts a clean frame with per-pixel bias draws.
pub fn apply_corruption(
    clean: &DepthFrame,
    glare_mask: &SeverityMask,
    params: &CorruptionParams,
    frame_index: u64,
) -> Result<(DepthFrame, Vec<PixelFate>)> {
    corrupt(clean, glare_mask, None, params, frame_index)
}

/// Corrupts a clean frame; glare spikes on the same surface tile share one
/// bias when `params.surface_anchored_bias` is set.
pub fn apply_corruption_on_surfaces(
    clean: &DepthFrame,
    glare_mask: &SeverityMask,
    surfaces: &[u64],
    params: &CorruptionParams,
    frame_index: u64,
) -> Result<(DepthFrame, Vec<PixelFate>)> {
    check_shape((clean.len(), 1), (surfaces.len(), 1))?;
    corrupt(clean, glare_mask, Some(surfaces), params, frame_index)
}

/// Per-frame random stream, independent of generation order.
pub(crate) fn frame_rng(seed: u64, frame_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_index);
    rng
}

fn corrupt(
    clean: &DepthFrame,
    mask: &SeverityMask,
    surfaces: Option<&[u64]>,
    params: &CorruptionParams,
    frame_index: u64,
) -> Result<(DepthFrame, Vec<PixelFate>)> {
    check_shape(clean.dims(), mask.dims())?;
    params.validate()?;
    let mut rng = frame_rng(params.seed, frame_index);
    let mut out = clean.clone();
    let mut fates = vec![PixelFate::Clean; clean.len()];
    let [lo, hi] = params.spike_bias_range;
    for i in 0..clean.len() {
        // every pixel consumes the same three draws so streams stay aligned
        let u: f64 = rng.random();
        let z: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.random();
        let Some(d) = clean.get(i) else { continue };
        let level = mask.get(i);
        let l = level.index();
        let mut measured = d;
        if u < params.hole_prob[l] {
            out.set(i, None);
            fates[i] = PixelFate::Hole;
            continue;
        } else if u < params.hole_prob[l] + params.spike_prob[l] {
            let bias = match surfaces {
                Some(s) if params.surface_anchored_bias && level > Severity::L0 && s[i] != NO_SURFACE => {
                    params.anchored_bias(s[i])
                }
                _ => lo + (hi - lo) * b,
            };
            measured += bias;
            fates[i] = PixelFate::Spike;
        }
        measured += params.noise_coeff * d * d * z;
        out.set(i, Some(measured));
    }
    Ok((out, fates))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize, d: f64) -> DepthFrame {
        DepthFrame::from_depths(n, 1, &vec![d; n]).unwrap()
    }

    #[test]
    fn zero_l0_hole_prob_gives_no_holes() {
        let clean = flat(1000, 2.0);
        let mask = SeverityMask::uniform(1000, 1, Severity::L0);
        let params = CorruptionParams {
            hole_prob: [0.0, 0.2, 0.45],
            ..Default::default()
        };
        let (out, _) = apply_corruption(&clean, &mask, &params, 0).unwrap();
        assert_eq!(out.valid_count(), 1000);
    }

    #[test]
    fn spikes_are_strictly_deeper() {
        let clean = flat(5000, 2.0);
        let mask = SeverityMask::uniform(5000, 1, Severity::L2);
        let params = CorruptionParams::default();
        let (out, fates) = apply_corruption(&clean, &mask, &params, 3).unwrap();
        let mut spikes = 0;
        for (i, f) in fates.iter().enumerate() {
            if *f == PixelFate::Spike {
                spikes += 1;
                assert!(out.get(i).unwrap() > 2.0);
            }
        }
        assert!(spikes > 1000);
    }

    #[test]
    fn anchored_spikes_share_tile_bias() {
        let clean = flat(4000, 2.0);
        let mask = SeverityMask::uniform(4000, 1, Severity::L2);
        let surfaces = vec![42u64; 4000];
        let params = CorruptionParams {
            noise_coeff: 0.0,
            ..Default::default()
        };
        let (out, fates) = apply_corruption_on_surfaces(&clean, &mask, &surfaces, &params, 0).unwrap();
        let spiked: Vec<f64> = (0..4000)
            .filter(|&i| fates[i] == PixelFate::Spike)
            .map(|i| out.get(i).unwrap())
            .collect();
        assert!(spiked.windows(2).all(|w| w[0] == w[1]));
        assert!(spiked[0] >= 2.5 && spiked[0] <= 5.0);
    }

    #[test]
    fn decreasing_severity_rates_are_rejected() {
        let params = CorruptionParams {
            spike_prob: [0.2, 0.1, 0.3],
            ..Default::default()
        };
        assert!(params.validate().is_err());
    }
}
