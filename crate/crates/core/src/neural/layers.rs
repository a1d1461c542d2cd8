use std::borrow::Cow;

use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

/// Convolution with stride 1 and zero padding `kernel / 2`, so the spatial
/// size is preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d<T> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    /// `[out][in][ky][kx]`.
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads<T> {
    pub x: Tensor<T>,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Conv2d<T> {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 || kernel.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "conv {in_channels}->{out_channels} with kernel {kernel} (needs odd kernel, positive channels)"
            )));
        }
        Ok(Self {
            in_channels,
            out_channels,
            kernel,
            weight: vec![T::zero(); out_channels * in_channels * kernel * kernel],
            bias: vec![T::zero(); out_channels],
        })
    }

    fn patch_len(&self) -> usize {
        self.in_channels * self.kernel * self.kernel
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        if x.channels != self.in_channels {
            return Err(Error::DimensionMismatch(format!(
                "conv expects {} input channels, got {}",
                self.in_channels, x.channels
            )));
        }
        Ok(())
    }

    /// Column matrix `[in * k * k][b * h * w]`.
    fn im2col<'a>(&self, x: &'a Tensor<T>) -> Cow<'a, [T]> {
        if self.kernel == 1 {
            return Cow::Borrowed(&x.data);
        }
        let (c_in, b, h, w) = x.shape();
        let k = self.kernel;
        let pad = (k / 2) as isize;
        let cols = b * h * w;
        let mut col = vec![T::zero(); c_in * k * k * cols];
        for c in 0..c_in {
            for ky in 0..k {
                for kx in 0..k {
                    let row = &mut col[((c * k + ky) * k + kx) * cols..][..cols];
                    let dy = ky as isize - pad;
                    let dx = kx as isize - pad;
                    for s in 0..b {
                        for y in 0..h {
                            let sy = y as isize + dy;
                            if sy < 0 || sy >= h as isize {
                                continue;
                            }
                            let src = &x.data[((c * b + s) * h + sy as usize) * w..][..w];
                            let dst = &mut row[(s * h + y) * w..][..w];
                            let x0 = (-dx).max(0) as usize;
                            let x1 = (w as isize - dx).min(w as isize).max(0) as usize;
                            for xo in x0..x1 {
                                dst[xo] = src[(xo as isize + dx) as usize];
                            }
                        }
                    }
                }
            }
        }
        Cow::Owned(col)
    }

    fn col2im(&self, col: &[T], b: usize, h: usize, w: usize) -> Tensor<T> {
        let k = self.kernel;
        let mut x = Tensor::zeros(self.in_channels, b, h, w);
        if k == 1 {
            x.data.copy_from_slice(col);
            return x;
        }
        let pad = (k / 2) as isize;
        let cols = b * h * w;
        for c in 0..self.in_channels {
            for ky in 0..k {
                for kx in 0..k {
                    let row = &col[((c * k + ky) * k + kx) * cols..][..cols];
                    let dy = ky as isize - pad;
                    let dx = kx as isize - pad;
                    for s in 0..b {
                        for y in 0..h {
                            let sy = y as isize + dy;
                            if sy < 0 || sy >= h as isize {
                                continue;
                            }
                            let src = &row[(s * h + y) * w..][..w];
                            let dst = &mut x.data[((c * b + s) * h + sy as usize) * w..][..w];
                            let x0 = (-dx).max(0) as usize;
                            let x1 = (w as isize - dx).min(w as isize).max(0) as usize;
                            for xo in x0..x1 {
                                dst[(xo as isize + dx) as usize] += src[xo];
                            }
                        }
                    }
                }
            }
        }
        x
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let (_, b, h, w) = x.shape();
        let cols = b * h * w;
        let col = self.im2col(x);
        let mut out = Tensor::zeros(self.out_channels, b, h, w);
        T::gemm(
            self.out_channels,
            self.patch_len(),
            cols,
            &self.weight,
            false,
            &col,
            false,
            &mut out.data,
            false,
        );
        for (o, &bias) in self.bias.iter().enumerate() {
            for v in out.channel_mut(o) {
                *v += bias;
            }
        }
        Ok(out)
    }

    /// Gradients with respect to the input, weights and bias, given the
    /// forward input `x` and the gradient of the output.
    pub fn backward(&self, x: &Tensor<T>, grad_out: &Tensor<T>) -> Result<ConvGrads<T>> {
        self.check_input(x)?;
        let (_, b, h, w) = x.shape();
        if grad_out.shape() != (self.out_channels, b, h, w) {
            return Err(Error::DimensionMismatch(
                "conv output gradient has the wrong shape".into(),
            ));
        }
        let cols = b * h * w;
        let col = self.im2col(x);
        let mut weight = vec![T::zero(); self.weight.len()];
        T::gemm(
            self.out_channels,
            cols,
            self.patch_len(),
            &grad_out.data,
            false,
            &col,
            true,
            &mut weight,
            false,
        );
        let bias = (0..self.out_channels)
            .map(|o| grad_out.channel(o).iter().copied().sum())
            .collect();
        let mut grad_col = vec![T::zero(); self.patch_len() * cols];
        T::gemm(
            self.patch_len(),
            self.out_channels,
            cols,
            &self.weight,
            true,
            &grad_out.data,
            false,
            &mut grad_col,
            false,
        );
        Ok(ConvGrads {
            x: self.col2im(&grad_col, b, h, w),
            weight,
            bias,
        })
    }
}

/// Per-channel batch normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub epsilon: f64,
}

/// Weight of the previous running statistic in each update.
pub const BN_MOMENTUM: f64 = 0.9;

/// Values saved by a training-mode forward pass.
#[derive(Debug, Clone)]
pub struct BnCache<T> {
    pub x_hat: Tensor<T>,
    pub inv_std: Vec<T>,
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnGrads<T> {
    pub x: Tensor<T>,
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(channels: usize, epsilon: f64) -> Self {
        Self {
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
            epsilon,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        if x.channels != self.channels() {
            return Err(Error::DimensionMismatch(format!(
                "batch norm expects {} channels, got {}",
                self.channels(),
                x.channels
            )));
        }
        Ok(())
    }

    /// Normalizes with batch statistics (biased variance). Running
    /// statistics are left untouched; see [`BatchNorm::update_running`].
    pub fn forward_train(&self, x: &Tensor<T>) -> Result<(Tensor<T>, BnCache<T>)> {
        self.check_input(x)?;
        let m = x.plane_len();
        if m < 2 {
            return Err(Error::InvalidArgument(format!(
                "batch norm needs at least 2 values per channel in training mode, got {m}"
            )));
        }
        let inv_m = T::of(1.0 / m as f64);
        let eps = T::of(self.epsilon);
        let mut y = Tensor::zeros(x.channels, x.batch, x.height, x.width);
        let mut x_hat = Tensor::zeros(x.channels, x.batch, x.height, x.width);
        let mut mean = Vec::with_capacity(x.channels);
        let mut var = Vec::with_capacity(x.channels);
        let mut inv_std = Vec::with_capacity(x.channels);
        for c in 0..x.channels {
            let xc = x.channel(c);
            let mu = xc.iter().copied().sum::<T>() * inv_m;
            let v = xc.iter().map(|&a| (a - mu) * (a - mu)).sum::<T>() * inv_m;
            let is = T::one() / (v + eps).sqrt();
            let (g, bt) = (self.gamma[c], self.beta[c]);
            for ((h, o), &a) in x_hat.channel_mut(c).iter_mut().zip(y.channel_mut(c)).zip(xc) {
                *h = (a - mu) * is;
                *o = g * *h + bt;
            }
            mean.push(mu);
            var.push(v);
            inv_std.push(is);
        }
        Ok((
            y,
            BnCache {
                x_hat,
                inv_std,
                mean,
                var,
            },
        ))
    }

    /// `running = 0.9 * running + 0.1 * batch`.
    pub fn update_running(&mut self, cache: &BnCache<T>) {
        let mom = T::of(BN_MOMENTUM);
        let rest = T::one() - mom;
        for c in 0..self.channels() {
            self.running_mean[c] = mom * self.running_mean[c] + rest * cache.mean[c];
            self.running_var[c] = mom * self.running_var[c] + rest * cache.var[c];
        }
    }

    pub fn forward_eval(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let eps = T::of(self.epsilon);
        let mut y = x.clone();
        for c in 0..x.channels {
            let scale = self.gamma[c] / (self.running_var[c] + eps).sqrt();
            let shift = self.beta[c] - scale * self.running_mean[c];
            for v in y.channel_mut(c) {
                *v = scale * *v + shift;
            }
        }
        Ok(y)
    }

    /// Backward pass of [`BatchNorm::forward_train`].
    pub fn backward(&self, cache: &BnCache<T>, grad_out: &Tensor<T>) -> Result<BnGrads<T>> {
        if grad_out.shape() != cache.x_hat.shape() {
            return Err(Error::DimensionMismatch(
                "batch norm output gradient has the wrong shape".into(),
            ));
        }
        let m = grad_out.plane_len();
        let m_t = T::of(m as f64);
        let inv_m = T::of(1.0 / m as f64);
        let mut gx = Tensor::zeros(grad_out.channels, grad_out.batch, grad_out.height, grad_out.width);
        let mut gamma = Vec::with_capacity(self.channels());
        let mut beta = Vec::with_capacity(self.channels());
        for c in 0..self.channels() {
            let dy = grad_out.channel(c);
            let xh = cache.x_hat.channel(c);
            let sum_dy: T = dy.iter().copied().sum();
            let sum_dy_xh: T = dy.iter().zip(xh).map(|(&a, &b)| a * b).sum();
            gamma.push(sum_dy_xh);
            beta.push(sum_dy);
            let k = self.gamma[c] * cache.inv_std[c] * inv_m;
            for ((o, &d), &h) in gx.channel_mut(c).iter_mut().zip(dy).zip(xh) {
                *o = k * (m_t * d - sum_dy - h * sum_dy_xh);
            }
        }
        Ok(BnGrads { x: gx, gamma, beta })
    }
}

pub fn relu_inplace<T: Real>(x: &mut Tensor<T>) {
    for v in &mut x.data {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Zeroes `grad` wherever the activation output was not positive.
pub fn relu_backward_inplace<T: Real>(output: &Tensor<T>, grad: &mut Tensor<T>) {
    for (g, &o) in grad.data.iter_mut().zip(&output.data) {
        if o <= T::zero() {
            *g = T::zero();
        }
    }
}
