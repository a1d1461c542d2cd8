use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::layers::{relu_backward_inplace, relu_inplace, BatchNorm, BnCache, Conv2d};
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

/// Depth planes per network input window.
pub const WINDOW_DEPTH: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub num_conv_layers: usize,
    pub hidden_channels: usize,
    pub input_channels: usize,
    pub output_channels: usize,
    pub input_height: usize,
    pub input_width: usize,
    /// Index of the layer whose input gets the raw network input appended
    /// along the channel axis.
    pub skip_concat_at: usize,
    pub batchnorm_epsilon: f64,
    /// With `false` every hidden layer is affine, which gradient checks use.
    pub relu: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self::desk(96)
    }
}

impl NetworkConfig {
    /// Reduced network that trains in minutes on a CPU.
    pub fn desk(num_lines: usize) -> Self {
        Self {
            num_conv_layers: 7,
            hidden_channels: 32,
            input_channels: 64,
            output_channels: 2,
            input_height: WINDOW_DEPTH,
            input_width: num_lines,
            skip_concat_at: 6,
            batchnorm_epsilon: 1e-5,
            relu: true,
        }
    }

    /// The full 29-layer geometry.
    pub fn full(num_lines: usize) -> Self {
        Self {
            num_conv_layers: 29,
            hidden_channels: 64,
            skip_concat_at: 28,
            ..Self::desk(num_lines)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_conv_layers < 2 {
            return bad(format!(
                "network needs at least 2 conv layers, got {}",
                self.num_conv_layers
            ));
        }
        if self.hidden_channels == 0 || self.input_channels == 0 || self.output_channels == 0 {
            return bad("network channel counts must be positive".into());
        }
        if self.input_height == 0 || self.input_width == 0 {
            return bad("network input must have positive spatial size".into());
        }
        if self.skip_concat_at == 0 || self.skip_concat_at >= self.num_conv_layers {
            return bad(format!(
                "skip_concat_at must lie in 1..{}, got {}",
                self.num_conv_layers, self.skip_concat_at
            ));
        }
        if !(self.batchnorm_epsilon > 0.0) {
            return bad("batchnorm_epsilon must be positive".into());
        }
        Ok(())
    }

    pub fn layer_in_channels(&self, i: usize) -> usize {
        let base = if i == 0 {
            self.input_channels
        } else {
            self.hidden_channels
        };
        if i == self.skip_concat_at {
            base + self.input_channels
        } else {
            base
        }
    }

    pub fn layer_out_channels(&self, i: usize) -> usize {
        if i + 1 == self.num_conv_layers {
            self.output_channels
        } else {
            self.hidden_channels
        }
    }

    pub fn layer_kernel(&self, i: usize) -> usize {
        if i + 1 == self.num_conv_layers {
            1
        } else {
            3
        }
    }

    pub fn num_parameters(&self) -> usize {
        (0..self.num_conv_layers)
            .map(|i| {
                let (ci, co, k) = (
                    self.layer_in_channels(i),
                    self.layer_out_channels(i),
                    self.layer_kernel(i),
                );
                let bn = if i + 1 < self.num_conv_layers { 2 * co } else { 0 };
                co * ci * k * k + co + bn
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub conv: Conv2d<T>,
    /// Present on every layer but the last.
    pub bn: Option<BatchNorm<T>>,
}

/// Role of a parameter slice; weight decay applies to conv weights only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    ConvWeight,
    ConvBias,
    BnScale,
    BnShift,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    config: NetworkConfig,
    pub layers: Vec<Layer<T>>,
    mode: Mode,
}

/// Intermediate values of a training-mode forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    pub(crate) conv_inputs: Vec<Tensor<T>>,
    pub(crate) bn: Vec<Option<BnCache<T>>>,
    pub(crate) activations: Vec<Option<Tensor<T>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
    pub gamma: Option<Vec<T>>,
    pub beta: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<LayerGrads<T>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient slices in [`Network::parameters`] order.
    pub fn slices(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.push(g.weight.as_slice());
            out.push(g.bias.as_slice());
            if let (Some(a), Some(b)) = (&g.gamma, &g.beta) {
                out.push(a.as_slice());
                out.push(b.as_slice());
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

impl<T: Real> Network<T> {
    /// All-zero parameters with fresh batch-norm state.
    pub fn zeros(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let n = config.num_conv_layers;
        let layers = (0..n)
            .map(|i| {
                let co = config.layer_out_channels(i);
                Ok(Layer {
                    conv: Conv2d::zeros(config.layer_in_channels(i), co, config.layer_kernel(i))?,
                    bn: (i + 1 < n).then(|| BatchNorm::new(co, config.batchnorm_epsilon)),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            config,
            layers,
            mode: Mode::Train,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn parameters(&self) -> Vec<(ParamKind, &[T])> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.push((ParamKind::ConvWeight, layer.conv.weight.as_slice()));
            out.push((ParamKind::ConvBias, layer.conv.bias.as_slice()));
            if let Some(bn) = &layer.bn {
                out.push((ParamKind::BnScale, bn.gamma.as_slice()));
                out.push((ParamKind::BnShift, bn.beta.as_slice()));
            }
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<(ParamKind, &mut [T])> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            out.push((ParamKind::ConvWeight, layer.conv.weight.as_mut_slice()));
            out.push((ParamKind::ConvBias, layer.conv.bias.as_mut_slice()));
            if let Some(bn) = &mut layer.bn {
                out.push((ParamKind::BnScale, bn.gamma.as_mut_slice()));
                out.push((ParamKind::BnShift, bn.beta.as_mut_slice()));
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.parameters().iter().all(|(_, p)| p.iter().all(|v| v.is_finite()))
    }

    pub fn cast<U: Real>(&self) -> Network<U> {
        let v = |s: &[T]| s.iter().map(|x| U::of(x.as_f64())).collect::<Vec<U>>();
        Network {
            config: self.config.clone(),
            mode: self.mode,
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    conv: Conv2d {
                        in_channels: l.conv.in_channels,
                        out_channels: l.conv.out_channels,
                        kernel: l.conv.kernel,
                        weight: v(&l.conv.weight),
                        bias: v(&l.conv.bias),
                    },
                    bn: l.bn.as_ref().map(|bn| BatchNorm {
                        gamma: v(&bn.gamma),
                        beta: v(&bn.beta),
                        running_mean: v(&bn.running_mean),
                        running_var: v(&bn.running_var),
                        epsilon: bn.epsilon,
                    }),
                })
                .collect(),
        }
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        let c = &self.config;
        if (x.channels, x.height, x.width) != (c.input_channels, c.input_height, c.input_width) {
            return Err(Error::DimensionMismatch(format!(
                "network expects {}x{}x{} input, got {}x{}x{}",
                c.input_channels, c.input_height, c.input_width, x.channels, x.height, x.width
            )));
        }
        Ok(())
    }

    /// Forward pass in the current mode. In training mode batch statistics
    /// are used but running statistics are not updated.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        match self.mode {
            Mode::Train => Ok(self.forward_train(x)?.0),
            Mode::Eval => self.forward_eval(x),
        }
    }

    fn forward_eval(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            if i == self.config.skip_concat_at {
                h = h.concat_channels(x)?;
            }
            h = layer.conv.forward(&h)?;
            if let Some(bn) = &layer.bn {
                h = bn.forward_eval(&h)?;
                if self.config.relu {
                    relu_inplace(&mut h);
                }
            }
        }
        Ok(h)
    }

    /// Training-mode forward pass keeping what [`Network::backward`] needs.
    pub fn forward_train(&self, x: &Tensor<T>) -> Result<(Tensor<T>, ForwardCache<T>)> {
        self.check_input(x)?;
        let n = self.layers.len();
        let mut cache = ForwardCache {
            conv_inputs: Vec::with_capacity(n),
            bn: Vec::with_capacity(n),
            activations: Vec::with_capacity(n),
        };
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            if i == self.config.skip_concat_at {
                h = h.concat_channels(x)?;
            }
            let z = layer.conv.forward(&h)?;
            cache.conv_inputs.push(h);
            h = match &layer.bn {
                Some(bn) => {
                    let (mut y, bc) = bn.forward_train(&z)?;
                    if self.config.relu {
                        relu_inplace(&mut y);
                    }
                    cache.bn.push(Some(bc));
                    cache.activations.push(Some(y.clone()));
                    y
                }
                None => {
                    cache.bn.push(None);
                    cache.activations.push(None);
                    z
                }
            };
        }
        Ok((h, cache))
    }

    /// Parameter gradients given the gradient of the loss with respect to
    /// the network output.
    pub fn backward(&self, cache: &ForwardCache<T>, grad_out: &Tensor<T>) -> Result<Gradients<T>> {
        let mut g = grad_out.clone();
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (mut gamma, mut beta) = (None, None);
            if let (Some(bn), Some(bc)) = (&layer.bn, &cache.bn[i]) {
                if self.config.relu {
                    let act = cache.activations[i]
                        .as_ref()
                        .expect("activation cached with batch norm");
                    relu_backward_inplace(act, &mut g);
                }
                let bg = bn.backward(bc, &g)?;
                gamma = Some(bg.gamma);
                beta = Some(bg.beta);
                g = bg.x;
            }
            let cg = layer.conv.backward(&cache.conv_inputs[i], &g)?;
            layers.push(LayerGrads {
                weight: cg.weight,
                bias: cg.bias,
                gamma,
                beta,
            });
            g = cg.x;
            if i == self.config.skip_concat_at {
                g = g
                    .split_channels(self.config.layer_in_channels(i) - self.config.input_channels)
                    .0;
            }
        }
        layers.reverse();
        Ok(Gradients { layers })
    }

    /// Folds the batch statistics of a training forward pass into the
    /// running statistics.
    pub fn update_running_stats(&mut self, cache: &ForwardCache<T>) {
        for (layer, bc) in self.layers.iter_mut().zip(&cache.bn) {
            if let (Some(bn), Some(bc)) = (&mut layer.bn, bc) {
                bn.update_running(bc);
            }
        }
    }
}

/// Gaussian Xavier initialization, `N(0, 2 / (fan_in + fan_out))`.
pub fn xavier_init<T: Real>(config: &NetworkConfig, seed: u64) -> Result<Network<T>> {
    let mut net = Network::<T>::zeros(config.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in &mut net.layers {
        let c = &layer.conv;
        let kk = c.kernel * c.kernel;
        let std = (2.0 / ((c.in_channels * kk + c.out_channels * kk) as f64)).sqrt();
        let normal = Normal::new(0.0, std).expect("finite std");
        for w in &mut layer.conv.weight {
            *w = T::of(normal.sample(&mut rng));
        }
    }
    Ok(net)
}

/// Mean squared error and its gradient `2 (pred - target) / count`.
pub fn loss_mse<T: Real>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<(f64, Tensor<T>)> {
    if pred.shape() != target.shape() {
        return Err(Error::DimensionMismatch(format!(
            "loss of {:?} against {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let count = pred.data.len() as f64;
    let mut sum = 0.0;
    let scale = T::of(2.0 / count);
    let mut grad = pred.clone();
    for (g, &t) in grad.data.iter_mut().zip(&target.data) {
        let d = *g - t;
        sum += d.as_f64() * d.as_f64();
        *g = scale * d;
    }
    Ok((sum / count, grad))
}

/// `p <- p - lr (g + weight_decay p)`, decay on conv weights only. Nothing
/// is changed when any gradient is non-finite.
pub fn sgd_step<T: Real>(net: &mut Network<T>, grads: &Gradients<T>, lr: f64, weight_decay: f64) -> Result<()> {
    if !grads.is_finite() {
        return Err(Error::Numeric("non-finite gradient, step skipped".into()));
    }
    let lr_t = T::of(lr);
    let wd = T::of(weight_decay);
    let gs = grads.slices();
    let params = net.parameters_mut();
    if gs.len() != params.len() || gs.iter().zip(&params).any(|(g, (_, p))| g.len() != p.len()) {
        return Err(Error::DimensionMismatch(
            "gradients do not match network parameters".into(),
        ));
    }
    for ((kind, p), g) in params.into_iter().zip(gs) {
        let decay = if kind == ParamKind::ConvWeight { wd } else { T::zero() };
        for (pv, &gv) in p.iter_mut().zip(g) {
            *pv -= lr_t * (gv + decay * *pv);
        }
    }
    Ok(())
}
