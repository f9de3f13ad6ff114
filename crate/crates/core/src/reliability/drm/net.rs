use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::layers::{
    conv3x3, conv3x3_backward_weights, depthwise3x3, depthwise3x3_backward, pointwise, pointwise_backward,
    relu_backward_inplace, relu_inplace, resize_bilinear, resize_bilinear_backward, sigmoid, Tensor,
};

/// Input channels: RGB, normalized depth, normalized temporal difference.
pub const INPUT_CHANNELS: usize = 5;

/// Channel widths. The decoder mirrors the encoder back down to `stem`
/// with additive skips, so every width is determined by these five numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrmSchedule {
    pub stem: usize,
    pub encoder: [usize; 4],
}

impl Default for DrmSchedule {
    fn default() -> Self {
        Self {
            stem: 16,
            encoder: [32, 64, 96, 128],
        }
    }
}

/// Parameter counts per network section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCounts {
    pub stem: usize,
    pub encoder: usize,
    pub decoder: usize,
    pub head: usize,
    pub total: usize,
}

/// Offsets of one separable block's weights in the flat array.
#[derive(Debug, Clone, Copy)]
struct BlockLayout {
    c_in: usize,
    c_out: usize,
    dw: usize,
    pw: usize,
}

#[derive(Debug, Clone)]
struct Layout {
    stem: usize,
    encoder: [BlockLayout; 4],
    decoder: [BlockLayout; 4],
    head: usize,
    total: usize,
}

impl DrmSchedule {
    /// Widths from the stem outwards: `[stem, e1, e2, e3, e4]`.
    fn widths(&self) -> [usize; 5] {
        [self.stem, self.encoder[0], self.encoder[1], self.encoder[2], self.encoder[3]]
    }

    fn layout(&self) -> Layout {
        let c = self.widths();
        let mut off = c[0] * INPUT_CHANNELS * 9;
        let mut block = |c_in: usize, c_out: usize| {
            let b = BlockLayout {
                c_in,
                c_out,
                dw: off,
                pw: off + c_in * 9,
            };
            off += c_in * 9 + c_in * c_out;
            b
        };
        let encoder = [block(c[0], c[1]), block(c[1], c[2]), block(c[2], c[3]), block(c[3], c[4])];
        let decoder = [block(c[4], c[3]), block(c[3], c[2]), block(c[2], c[1]), block(c[1], c[0])];
        let head = off;
        Layout {
            stem: 0,
            encoder,
            decoder,
            head,
            total: head + c[0],
        }
    }

    pub fn param_counts(&self) -> ParamCounts {
        let l = self.layout();
        let block = |b: &BlockLayout| b.c_in * 9 + b.c_in * b.c_out;
        let stem = self.stem * INPUT_CHANNELS * 9;
        let encoder = l.encoder.iter().map(block).sum();
        let decoder = l.decoder.iter().map(block).sum();
        ParamCounts {
            stem,
            encoder,
            decoder,
            head: self.stem,
            total: l.total,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths().contains(&0) {
            return Err(Error::MalformedModel("channel widths must be nonzero".into()));
        }
        Ok(())
    }
}

/// Weights plus the schedule that gives them meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct DrmNet {
    pub schedule: DrmSchedule,
    pub weights: Vec<f64>,
}

/// Activations kept for the backward pass.
pub struct ForwardCache {
    input: Tensor,
    s0: Tensor,
    enc_mid: [Tensor; 4],
    enc: [Tensor; 4],
    dec_up: [Tensor; 4],
    dec_mid: [Tensor; 4],
    dec: [Tensor; 4],
    /// Sigmoid output, `1 x H x W`.
    pub output: Tensor,
}

impl DrmNet {
    pub fn zeros(schedule: DrmSchedule) -> Self {
        let n = schedule.param_counts().total;
        Self {
            schedule,
            weights: vec![0.0; n],
        }
    }

    /// He-normal initialization from `seed`.
    pub fn init(schedule: DrmSchedule, seed: u64) -> Self {
        let mut net = Self::zeros(schedule);
        let l = schedule.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |w: &mut [f64], fan_in: usize| {
            let d = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            for v in w {
                *v = d.sample(&mut rng);
            }
        };
        let c0 = schedule.stem;
        fill(&mut net.weights[l.stem..l.stem + c0 * INPUT_CHANNELS * 9], INPUT_CHANNELS * 9);
        for b in l.encoder.iter().chain(&l.decoder) {
            fill(&mut net.weights[b.dw..b.pw], 9);
            fill(&mut net.weights[b.pw..b.pw + b.c_in * b.c_out], b.c_in);
        }
        // the head feeds a sigmoid, so it uses a unit-gain scale
        fill(&mut net.weights[l.head..l.head + c0], 2 * c0);
        net
    }

    /// Zeroes the pointwise weights of every decoder block, so each block
    /// starts as the identity on its skip input and the head initially
    /// reads the stem features directly.
    pub fn zero_decoder_pointwise(&mut self) {
        for b in self.schedule.layout().decoder {
            self.weights[b.pw..b.pw + b.c_in * b.c_out].fill(0.0);
        }
    }

    /// Divides the stem weights reading input channel `c` by `rms[c]`, so
    /// each channel starts with unit-RMS contribution whatever its range.
    /// Channels with negligible energy are left alone.
    pub fn scale_stem_inputs(&mut self, rms: &[f64]) {
        let c0 = self.schedule.stem;
        for (c, &r) in rms.iter().enumerate().take(INPUT_CHANNELS) {
            if r < 1e-6 {
                continue;
            }
            for o in 0..c0 {
                let base = (o * INPUT_CHANNELS + c) * 9;
                for w in &mut self.weights[base..base + 9] {
                    *w /= r;
                }
            }
        }
    }

    pub fn check(&self) -> Result<()> {
        self.schedule.validate()?;
        let expect = self.schedule.param_counts().total;
        if self.weights.len() != expect {
            return Err(Error::MalformedModel(format!(
                "schedule needs {expect} weights, found {}",
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::MalformedModel("non-finite weight".into()));
        }
        Ok(())
    }

    /// Forward pass on a `5 x H x W` input, keeping activations.
    pub fn forward(&self, input: Tensor) -> Result<ForwardCache> {
        self.check()?;
        if input.c != INPUT_CHANNELS || input.h == 0 || input.w == 0 {
            return Err(Error::ShapeMismatch {
                expected: (INPUT_CHANNELS, 1),
                found: (input.c, input.plane()),
            });
        }
        let l = self.schedule.layout();
        let w = &self.weights;
        let c0 = self.schedule.stem;
        let mut s0 = conv3x3(&input, &w[l.stem..l.stem + c0 * INPUT_CHANNELS * 9], c0);
        relu_inplace(&mut s0);

        let mut enc_mid: Vec<Tensor> = Vec::with_capacity(4);
        let mut enc: Vec<Tensor> = Vec::with_capacity(4);
        for (k, b) in l.encoder.iter().enumerate() {
            let x = if k == 0 { &s0 } else { &enc[k - 1] };
            let mid = depthwise3x3(x, &w[b.dw..b.pw], 2);
            let mut y = pointwise(&mid, &w[b.pw..b.pw + b.c_in * b.c_out], b.c_out);
            relu_inplace(&mut y);
            enc_mid.push(mid);
            enc.push(y);
        }

        let mut dec_up: Vec<Tensor> = Vec::with_capacity(4);
        let mut dec_mid: Vec<Tensor> = Vec::with_capacity(4);
        let mut dec: Vec<Tensor> = Vec::with_capacity(4);
        for (k, b) in l.decoder.iter().enumerate() {
            let x = if k == 0 { &enc[3] } else { &dec[k - 1] };
            let skip = if k == 3 { &s0 } else { &enc[2 - k] };
            let up = resize_bilinear(x, skip.h, skip.w);
            let mid = depthwise3x3(&up, &w[b.dw..b.pw], 1);
            let mut y = pointwise(&mid, &w[b.pw..b.pw + b.c_in * b.c_out], b.c_out);
            for (v, s) in y.data.iter_mut().zip(&skip.data) {
                *v += s;
            }
            relu_inplace(&mut y);
            dec_up.push(up);
            dec_mid.push(mid);
            dec.push(y);
        }

        let mut output = pointwise(&dec[3], &w[l.head..l.head + c0], 1);
        for v in &mut output.data {
            *v = sigmoid(*v);
        }
        let arr = |v: Vec<Tensor>| -> [Tensor; 4] { v.try_into().expect("four blocks") };
        Ok(ForwardCache {
            input,
            s0,
            enc_mid: arr(enc_mid),
            enc: arr(enc),
            dec_up: arr(dec_up),
            dec_mid: arr(dec_mid),
            dec: arr(dec),
            output,
        })
    }

    /// Sign pattern of every ReLU in the network; the loss is smooth in the
    /// weights wherever this pattern (and each residual's sign) is fixed.
    pub fn activation_pattern(cache: &ForwardCache) -> Vec<bool> {
        let mut out: Vec<bool> = cache.s0.data.iter().map(|&v| v > 0.0).collect();
        for t in cache.enc.iter().chain(&cache.dec) {
            out.extend(t.data.iter().map(|&v| v > 0.0));
        }
        out
    }

    /// Sigmoid output only.
    pub fn predict(&self, input: Tensor) -> Result<Tensor> {
        Ok(self.forward(input)?.output)
    }

    /// Gradient of a loss with respect to every weight, given the loss
    /// gradient `d_out` with respect to the sigmoid output.
    pub fn backward(&self, cache: &ForwardCache, d_out: &Tensor) -> Vec<f64> {
        let mut d_logit = d_out.clone();
        for (g, &p) in d_logit.data.iter_mut().zip(&cache.output.data) {
            *g *= p * (1.0 - p);
        }
        self.backward_logit(cache, &d_logit)
    }

    /// As `backward`, given the gradient with respect to the pre-sigmoid
    /// logit instead.
    pub fn backward_logit(&self, cache: &ForwardCache, d_logit: &Tensor) -> Vec<f64> {
        let l = self.schedule.layout();
        let w = &self.weights;
        let c0 = self.schedule.stem;
        let mut grad = vec![0.0; w.len()];

        let (mut d_y, dw_head) = pointwise_backward(&cache.dec[3], &w[l.head..l.head + c0], d_logit);
        grad[l.head..l.head + c0].copy_from_slice(&dw_head);

        // gradients arriving at each skip source
        let mut d_s0 = cache.s0.like();
        let mut d_enc: Vec<Tensor> = cache.enc.iter().map(Tensor::like).collect();

        for k in (0..4).rev() {
            let b = l.decoder[k];
            relu_backward_inplace(&cache.dec[k], &mut d_y);
            let skip_grad = if k == 3 { &mut d_s0 } else { &mut d_enc[2 - k] };
            for (a, g) in skip_grad.data.iter_mut().zip(&d_y.data) {
                *a += g;
            }
            let (d_mid, dw_pw) = pointwise_backward(&cache.dec_mid[k], &w[b.pw..b.pw + b.c_in * b.c_out], &d_y);
            grad[b.pw..b.pw + b.c_in * b.c_out].copy_from_slice(&dw_pw);
            let (d_up, dw_dw) = depthwise3x3_backward(&cache.dec_up[k], &w[b.dw..b.pw], 1, &d_mid);
            grad[b.dw..b.pw].copy_from_slice(&dw_dw);
            let src = if k == 0 { &cache.enc[3] } else { &cache.dec[k - 1] };
            d_y = resize_bilinear_backward(&d_up, src.h, src.w);
        }
        // d_y now holds the decoder's gradient w.r.t. e4
        for (a, g) in d_enc[3].data.iter_mut().zip(&d_y.data) {
            *a += g;
        }

        for k in (0..4).rev() {
            let b = l.encoder[k];
            let mut g = std::mem::replace(&mut d_enc[k], Tensor::zeros(0, 0, 0));
            relu_backward_inplace(&cache.enc[k], &mut g);
            let (d_mid, dw_pw) = pointwise_backward(&cache.enc_mid[k], &w[b.pw..b.pw + b.c_in * b.c_out], &g);
            grad[b.pw..b.pw + b.c_in * b.c_out].copy_from_slice(&dw_pw);
            let x = if k == 0 { &cache.s0 } else { &cache.enc[k - 1] };
            let (d_x, dw_dw) = depthwise3x3_backward(x, &w[b.dw..b.pw], 2, &d_mid);
            grad[b.dw..b.pw].copy_from_slice(&dw_dw);
            let target = if k == 0 { &mut d_s0 } else { &mut d_enc[k - 1] };
            for (a, v) in target.data.iter_mut().zip(&d_x.data) {
                *a += v;
            }
        }

        relu_backward_inplace(&cache.s0, &mut d_s0);
        let stem_w = &w[l.stem..l.stem + c0 * INPUT_CHANNELS * 9];
        let dw_stem = conv3x3_backward_weights(&cache.input, stem_w, c0, &d_s0);
        grad[l.stem..l.stem + stem_w.len()].copy_from_slice(&dw_stem);
        grad
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_counts() {
        let c = DrmSchedule::default().param_counts();
        assert_eq!(c.stem, 5 * 9 * 16);
        assert_eq!(c.encoder, 656 + 2336 + 6720 + 13152);
        assert_eq!(c.decoder, 13440 + 7008 + 2624 + 800);
        assert_eq!(c.head, 16);
        assert_eq!(c.total, c.stem + c.encoder + c.decoder + c.head);
    }

    #[test]
    fn zero_weights_give_one_half() {
        let net = DrmNet::zeros(DrmSchedule::default());
        let mut x = Tensor::zeros(5, 13, 17);
        x.data.iter_mut().enumerate().for_each(|(i, v)| *v = (i % 7) as f64 / 7.0);
        let y = net.predict(x).unwrap();
        assert_eq!((y.h, y.w), (13, 17));
        assert!(y.data.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn wrong_weight_length_is_malformed() {
        let mut net = DrmNet::zeros(DrmSchedule::default());
        net.weights.pop();
        assert!(matches!(net.predict(Tensor::zeros(5, 4, 4)), Err(Error::MalformedModel(_))));
    }
}
