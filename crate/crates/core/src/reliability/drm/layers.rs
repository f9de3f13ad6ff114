//! Bias-free convolution primitives on channel-major `f64` tensors, each
//! with its exact backward pass.

/// Channel-major feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(c: usize, h: usize, w: usize) -> Self {
        Self {
            c,
            h,
            w,
            data: vec![0.0; c * h * w],
        }
    }

    pub fn plane(&self) -> usize {
        self.h * self.w
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.plane();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.plane();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn like(&self) -> Self {
        Self::zeros(self.c, self.h, self.w)
    }
}

/// Output side length of a 3x3, pad-1 convolution with `stride`.
pub fn strided_len(n: usize, stride: usize) -> usize {
    (n - 1) / stride + 1
}

/// Full 3x3 convolution, pad 1, stride 1. `w` is `[out][in][3][3]`.
pub fn conv3x3(x: &Tensor, w: &[f64], c_out: usize) -> Tensor {
    debug_assert_eq!(w.len(), c_out * x.c * 9);
    let (h, wd) = (x.h, x.w);
    let mut y = Tensor::zeros(c_out, h, wd);
    for o in 0..c_out {
        let yo = y.channel_mut(o);
        for i in 0..x.c {
            let xi = x.channel(i);
            let k = &w[(o * x.c + i) * 9..(o * x.c + i + 1) * 9];
            accumulate_3x3(xi, h, wd, k, 1, yo, h, wd);
        }
    }
    y
}

/// Adds the 3x3 correlation of `x` with kernel `k` into `y`.
#[allow(clippy::too_many_arguments)]
#[inline]
fn accumulate_3x3(x: &[f64], h: usize, w: usize, k: &[f64], stride: usize, y: &mut [f64], ho: usize, wo: usize) {
    for oy in 0..ho {
        let cy = (oy * stride) as isize;
        for ky in 0..3 {
            let iy = cy + ky as isize - 1;
            if iy < 0 || iy >= h as isize {
                continue;
            }
            let xrow = &x[iy as usize * w..(iy as usize + 1) * w];
            let yrow = &mut y[oy * wo..(oy + 1) * wo];
            for kx in 0..3 {
                let kv = k[ky * 3 + kx];
                if kv == 0.0 {
                    continue;
                }
                if stride == 1 {
                    // interior columns without bounds checks
                    let (lo, hi) = match kx {
                        0 => (1, wo),
                        1 => (0, wo),
                        _ => (0, wo.saturating_sub(1)),
                    };
                    let off = kx as isize - 1;
                    for ox in lo..hi {
                        yrow[ox] += kv * xrow[(ox as isize + off) as usize];
                    }
                } else {
                    for (ox, yv) in yrow.iter_mut().enumerate() {
                        let ix = (ox * stride) as isize + kx as isize - 1;
                        if ix >= 0 && ix < w as isize {
                            *yv += kv * xrow[ix as usize];
                        }
                    }
                }
            }
        }
    }
}

/// Backward of `accumulate_3x3`: adds `dk` and `dx` contributions.
#[allow(clippy::too_many_arguments)]
#[inline]
fn backward_3x3(
    x: &[f64],
    h: usize,
    w: usize,
    k: &[f64],
    stride: usize,
    dy: &[f64],
    ho: usize,
    wo: usize,
    dk: &mut [f64],
    mut dx: Option<&mut [f64]>,
) {
    for oy in 0..ho {
        let cy = (oy * stride) as isize;
        let dyrow = &dy[oy * wo..(oy + 1) * wo];
        for ky in 0..3 {
            let iy = cy + ky as isize - 1;
            if iy < 0 || iy >= h as isize {
                continue;
            }
            let row = iy as usize * w;
            for kx in 0..3 {
                let kv = k[ky * 3 + kx];
                let mut acc = 0.0;
                for (ox, &g) in dyrow.iter().enumerate() {
                    let ix = (ox * stride) as isize + kx as isize - 1;
                    if ix >= 0 && ix < w as isize {
                        acc += g * x[row + ix as usize];
                        if let Some(dx) = dx.as_deref_mut() {
                            dx[row + ix as usize] += g * kv;
                        }
                    }
                }
                dk[ky * 3 + kx] += acc;
            }
        }
    }
}

/// Returns `dw` for `conv3x3`; the input gradient is never needed because
/// the stem reads the network input.
pub fn conv3x3_backward_weights(x: &Tensor, w: &[f64], c_out: usize, dy: &Tensor) -> Vec<f64> {
    let mut dw = vec![0.0; w.len()];
    for o in 0..c_out {
        let dyo = dy.channel(o);
        for i in 0..x.c {
            let base = (o * x.c + i) * 9;
            let k = &w[base..base + 9];
            backward_3x3(x.channel(i), x.h, x.w, k, 1, dyo, x.h, x.w, &mut dw[base..base + 9], None);
        }
    }
    dw
}

/// Depthwise 3x3 convolution, pad 1. `w` is `[c][3][3]`.
pub fn depthwise3x3(x: &Tensor, w: &[f64], stride: usize) -> Tensor {
    debug_assert_eq!(w.len(), x.c * 9);
    let (ho, wo) = (strided_len(x.h, stride), strided_len(x.w, stride));
    let mut y = Tensor::zeros(x.c, ho, wo);
    for c in 0..x.c {
        let k = &w[c * 9..(c + 1) * 9];
        accumulate_3x3(x.channel(c), x.h, x.w, k, stride, y.channel_mut(c), ho, wo);
    }
    y
}

/// Returns `(dx, dw)` for `depthwise3x3`.
pub fn depthwise3x3_backward(x: &Tensor, w: &[f64], stride: usize, dy: &Tensor) -> (Tensor, Vec<f64>) {
    let mut dx = x.like();
    let mut dw = vec![0.0; w.len()];
    let n = x.plane();
    for c in 0..x.c {
        let k = &w[c * 9..(c + 1) * 9];
        let dxc = &mut dx.data[c * n..(c + 1) * n];
        backward_3x3(
            x.channel(c),
            x.h,
            x.w,
            k,
            stride,
            dy.channel(c),
            dy.h,
            dy.w,
            &mut dw[c * 9..(c + 1) * 9],
            Some(dxc),
        );
    }
    (dx, dw)
}

/// 1x1 convolution. `w` is `[out][in]`.
pub fn pointwise(x: &Tensor, w: &[f64], c_out: usize) -> Tensor {
    debug_assert_eq!(w.len(), c_out * x.c);
    let mut y = Tensor::zeros(c_out, x.h, x.w);
    for o in 0..c_out {
        let yo = y.channel_mut(o);
        for i in 0..x.c {
            let wv = w[o * x.c + i];
            for (yv, &xv) in yo.iter_mut().zip(x.channel(i)) {
                *yv += wv * xv;
            }
        }
    }
    y
}

/// Returns `(dx, dw)` for `pointwise`.
pub fn pointwise_backward(x: &Tensor, w: &[f64], dy: &Tensor) -> (Tensor, Vec<f64>) {
    let c_out = dy.c;
    let mut dx = x.like();
    let mut dw = vec![0.0; w.len()];
    let n = x.plane();
    for o in 0..c_out {
        let dyo = dy.channel(o);
        for i in 0..x.c {
            let xi = x.channel(i);
            dw[o * x.c + i] = dyo.iter().zip(xi).map(|(a, b)| a * b).sum();
            let wv = w[o * x.c + i];
            for (d, &g) in dx.data[i * n..(i + 1) * n].iter_mut().zip(dyo) {
                *d += wv * g;
            }
        }
    }
    (dx, dw)
}

pub fn relu_inplace(x: &mut Tensor) {
    for v in &mut x.data {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zeroes `dy` wherever the ReLU output `y` is not positive.
pub fn relu_backward_inplace(y: &Tensor, dy: &mut Tensor) {
    for (g, &v) in dy.data.iter_mut().zip(&y.data) {
        if v <= 0.0 {
            *g = 0.0;
        }
    }
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Source taps for half-pixel-centred bilinear resampling of one axis:
/// `(i0, i1, frac)` per output index.
fn bilinear_taps(n_in: usize, n_out: usize) -> Vec<(usize, usize, f64)> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|o| {
            let src = ((o as f64 + 0.5) * scale - 0.5).max(0.0);
            let i0 = (src.floor() as usize).min(n_in - 1);
            let i1 = (i0 + 1).min(n_in - 1);
            (i0, i1, src - i0 as f64)
        })
        .collect()
}

/// Bilinear resize of every channel to `h x w`, half-pixel centres.
pub fn resize_bilinear(x: &Tensor, h: usize, w: usize) -> Tensor {
    let ty = bilinear_taps(x.h, h);
    let tx = bilinear_taps(x.w, w);
    let mut y = Tensor::zeros(x.c, h, w);
    for c in 0..x.c {
        let xc = x.channel(c);
        let yc = &mut y.data[c * h * w..(c + 1) * h * w];
        for (oy, &(y0, y1, fy)) in ty.iter().enumerate() {
            let r0 = &xc[y0 * x.w..(y0 + 1) * x.w];
            let r1 = &xc[y1 * x.w..(y1 + 1) * x.w];
            for (ox, &(x0, x1, fx)) in tx.iter().enumerate() {
                let top = r0[x0] + fx * (r0[x1] - r0[x0]);
                let bot = r1[x0] + fx * (r1[x1] - r1[x0]);
                yc[oy * w + ox] = top + fy * (bot - top);
            }
        }
    }
    y
}

/// Adjoint of `resize_bilinear` applied to `dy`, producing a gradient with
/// the shape of the original input.
pub fn resize_bilinear_backward(dy: &Tensor, h_in: usize, w_in: usize) -> Tensor {
    let ty = bilinear_taps(h_in, dy.h);
    let tx = bilinear_taps(w_in, dy.w);
    let mut dx = Tensor::zeros(dy.c, h_in, w_in);
    for c in 0..dy.c {
        let g = dy.channel(c);
        let base = c * h_in * w_in;
        for (oy, &(y0, y1, fy)) in ty.iter().enumerate() {
            for (ox, &(x0, x1, fx)) in tx.iter().enumerate() {
                let v = g[oy * dy.w + ox];
                dx.data[base + y0 * w_in + x0] += v * (1.0 - fy) * (1.0 - fx);
                dx.data[base + y0 * w_in + x1] += v * (1.0 - fy) * fx;
                dx.data[base + y1 * w_in + x0] += v * fy * (1.0 - fx);
                dx.data[base + y1 * w_in + x1] += v * fy * fx;
            }
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(c: usize, h: usize, w: usize) -> Tensor {
        let mut t = Tensor::zeros(c, h, w);
        for (i, v) in t.data.iter_mut().enumerate() {
            *v = ((i * 37 % 11) as f64 - 5.0) / 4.0;
        }
        t
    }

    /// Direct definition of a padded strided correlation.
    fn conv_oracle(x: &[f64], h: usize, w: usize, k: &[f64], stride: usize) -> Vec<f64> {
        let (ho, wo) = (strided_len(h, stride), strided_len(w, stride));
        let mut y = vec![0.0; ho * wo];
        for oy in 0..ho {
            for ox in 0..wo {
                for ky in 0..3 {
                    for kx in 0..3 {
                        let iy = (oy * stride + ky) as isize - 1;
                        let ix = (ox * stride + kx) as isize - 1;
                        if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                            y[oy * wo + ox] += k[ky * 3 + kx] * x[iy as usize * w + ix as usize];
                        }
                    }
                }
            }
        }
        y
    }

    #[test]
    fn depthwise_matches_direct_loop() {
        let x = ramp(2, 5, 7);
        let k: Vec<f64> = (0..18).map(|i| (i as f64 - 9.0) / 7.0).collect();
        for stride in [1, 2] {
            let y = depthwise3x3(&x, &k, stride);
            for c in 0..2 {
                let expect = conv_oracle(x.channel(c), 5, 7, &k[c * 9..(c + 1) * 9], stride);
                for (a, b) in y.channel(c).iter().zip(&expect) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn one_by_one_input_uses_centre_tap_only() {
        // with a 1x1 map every off-centre tap reads padding
        let mut x = Tensor::zeros(2, 1, 1);
        x.data = vec![2.0, -3.0];
        let dw: Vec<f64> = (0..18).map(|i| i as f64).collect();
        let d = depthwise3x3(&x, &dw, 2);
        assert_eq!(d.data, vec![2.0 * 4.0, -3.0 * 13.0]);
        let p = pointwise(&d, &[0.5, 1.0, -1.0, 2.0], 2);
        assert_eq!(p.data, vec![0.5 * 8.0 - 39.0, -8.0 - 78.0]);
    }

    #[test]
    fn resize_identity_and_constant() {
        let x = ramp(1, 4, 6);
        assert_eq!(resize_bilinear(&x, 4, 6), x);
        let mut c = Tensor::zeros(1, 3, 3);
        c.data.fill(1.5);
        assert!(resize_bilinear(&c, 7, 5).data.iter().all(|&v| (v - 1.5).abs() < 1e-12));
    }

    #[test]
    fn resize_backward_is_adjoint() {
        let x = ramp(2, 3, 5);
        let g = ramp(2, 6, 9);
        let y = resize_bilinear(&x, 6, 9);
        let lhs: f64 = y.data.iter().zip(&g.data).map(|(a, b)| a * b).sum();
        let dx = resize_bilinear_backward(&g, 3, 5);
        let rhs: f64 = x.data.iter().zip(&dx.data).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }
}
