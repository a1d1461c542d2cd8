//! Central finite-difference checks of the hand-written backward passes.
//!
//! Everything runs in `f64`. Perturbations that flip a ReLU are retried with
//! a smaller step and skipped if the flip persists, since the loss has a kink
//! there and no finite difference converges to the one-sided derivative.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::layers::{BatchNorm, Conv2d};
use super::network::{loss_mse, ForwardCache, Network};
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

/// Gradients below this magnitude are compared in absolute terms.
pub const GRADIENT_FLOOR: f64 = 1e-7;

/// Step reductions tried before a ReLU kink is skipped.
const KINK_RETRIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub checked: usize,
    pub skipped: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRADIENT_FLOOR)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {eps}"
        )));
    }
    Ok(())
}

fn random_tensor(rng: &mut ChaCha8Rng, c: usize, b: usize, h: usize, w: usize) -> Tensor<f64> {
    let data = (0..c * b * h * w).map(|_| StandardNormal.sample(rng)).collect();
    Tensor::from_vec(c, b, h, w, data).expect("positive dims")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn relu_pattern(net: &Network<f64>, cache: &ForwardCache<f64>) -> Vec<bool> {
    if !net.config().relu {
        return Vec::new();
    }
    cache
        .activations
        .iter()
        .flatten()
        .flat_map(|t| t.data.iter().map(|&v| v > 0.0))
        .collect()
}

/// Checks every parameter gradient of `net` on a fixed random batch of two
/// samples against central differences of the MSE loss.
pub fn gradient_check<T: Real>(net: &Network<T>, eps: f64) -> Result<GradCheckReport> {
    check_eps(eps)?;
    let c = net.config();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6772_6164);
    let input = random_tensor(&mut rng, c.input_channels, 2, c.input_height, c.input_width);
    let target = random_tensor(&mut rng, c.output_channels, 2, c.input_height, c.input_width);
    gradient_check_with(&net.cast(), &input, &target, eps)
}

pub fn gradient_check_with(
    net: &Network<f64>,
    input: &Tensor<f64>,
    target: &Tensor<f64>,
    eps: f64,
) -> Result<GradCheckReport> {
    check_eps(eps)?;
    let (pred, cache) = net.forward_train(input)?;
    let (_, grad_out) = loss_mse(&pred, target)?;
    let grads = net.backward(&cache, &grad_out)?;
    let base_pattern = relu_pattern(net, &cache);
    let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();

    let probe = |net: &Network<f64>| -> Result<(f64, Vec<bool>)> {
        let (p, c) = net.forward_train(input)?;
        Ok((loss_mse(&p, target)?.0, relu_pattern(net, &c)))
    };

    let mut work = net.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    for (s, grad) in analytic.iter().enumerate() {
        for (i, &a) in grad.iter().enumerate() {
            let original = work.parameters()[s].1[i];
            let mut step = eps;
            let mut numeric = None;
            for _ in 0..=KINK_RETRIES {
                work.parameters_mut()[s].1[i] = original + step;
                let (lp, pp) = probe(&work)?;
                work.parameters_mut()[s].1[i] = original - step;
                let (lm, pm) = probe(&work)?;
                work.parameters_mut()[s].1[i] = original;
                if pp == base_pattern && pm == base_pattern {
                    numeric = Some((lp - lm) / (2.0 * step));
                    break;
                }
                step *= 0.1;
            }
            match numeric {
                Some(n) => {
                    report.checked += 1;
                    report.max_relative_error = report.max_relative_error.max(relative_error(a, n));
                }
                None => report.skipped += 1,
            }
        }
    }
    Ok(report)
}

/// Checks input, weight and bias gradients of a 3x3 convolution on a random
/// `2 x 4 x 5` input, using the loss `sum(r * conv(x))` for a random `r`.
pub fn conv2d_gradient_check(seed: u64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut conv = Conv2d::<f64>::zeros(2, 3, 3)?;
    for w in conv.weight.iter_mut().chain(conv.bias.iter_mut()) {
        *w = StandardNormal.sample(&mut rng);
    }
    let x = random_tensor(&mut rng, 2, 1, 4, 5);
    let r = random_tensor(&mut rng, 3, 1, 4, 5);
    let grads = conv.backward(&x, &r)?;
    let loss = |conv: &Conv2d<f64>, x: &Tensor<f64>| -> Result<f64> { Ok(dot(&conv.forward(x)?.data, &r.data)) };

    let mut worst = 0.0f64;
    let mut xw = x.clone();
    for i in 0..x.data.len() {
        let v = xw.data[i];
        xw.data[i] = v + eps;
        let lp = loss(&conv, &xw)?;
        xw.data[i] = v - eps;
        let lm = loss(&conv, &xw)?;
        xw.data[i] = v;
        worst = worst.max(relative_error(grads.x.data[i], (lp - lm) / (2.0 * eps)));
    }
    let mut cw = conv.clone();
    for i in 0..conv.weight.len() {
        let v = cw.weight[i];
        cw.weight[i] = v + eps;
        let lp = loss(&cw, &x)?;
        cw.weight[i] = v - eps;
        let lm = loss(&cw, &x)?;
        cw.weight[i] = v;
        worst = worst.max(relative_error(grads.weight[i], (lp - lm) / (2.0 * eps)));
    }
    for i in 0..conv.bias.len() {
        let v = cw.bias[i];
        cw.bias[i] = v + eps;
        let lp = loss(&cw, &x)?;
        cw.bias[i] = v - eps;
        let lm = loss(&cw, &x)?;
        cw.bias[i] = v;
        worst = worst.max(relative_error(grads.bias[i], (lp - lm) / (2.0 * eps)));
    }
    Ok(worst)
}

/// Checks input, scale and shift gradients of training-mode batch
/// normalization on a random `3 x 2 x 2 x 4` batch.
pub fn batchnorm_gradient_check(seed: u64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bn = BatchNorm::<f64>::new(3, 1e-5);
    for g in bn.gamma.iter_mut().chain(bn.beta.iter_mut()) {
        *g = StandardNormal.sample(&mut rng);
    }
    let x = random_tensor(&mut rng, 3, 2, 2, 4);
    let r = random_tensor(&mut rng, 3, 2, 2, 4);
    let (_, cache) = bn.forward_train(&x)?;
    let grads = bn.backward(&cache, &r)?;
    let loss = |bn: &BatchNorm<f64>, x: &Tensor<f64>| -> Result<f64> { Ok(dot(&bn.forward_train(x)?.0.data, &r.data)) };

    let mut worst = 0.0f64;
    let mut xw = x.clone();
    for i in 0..x.data.len() {
        let v = xw.data[i];
        xw.data[i] = v + eps;
        let lp = loss(&bn, &xw)?;
        xw.data[i] = v - eps;
        let lm = loss(&bn, &xw)?;
        xw.data[i] = v;
        worst = worst.max(relative_error(grads.x.data[i], (lp - lm) / (2.0 * eps)));
    }
    let mut bw = bn.clone();
    for c in 0..3 {
        let v = bw.gamma[c];
        bw.gamma[c] = v + eps;
        let lp = loss(&bw, &x)?;
        bw.gamma[c] = v - eps;
        let lm = loss(&bw, &x)?;
        bw.gamma[c] = v;
        worst = worst.max(relative_error(grads.gamma[c], (lp - lm) / (2.0 * eps)));
        let v = bw.beta[c];
        bw.beta[c] = v + eps;
        let lp = loss(&bw, &x)?;
        bw.beta[c] = v - eps;
        let lm = loss(&bw, &x)?;
        bw.beta[c] = v;
        worst = worst.max(relative_error(grads.beta[c], (lp - lm) / (2.0 * eps)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::network::{xavier_init, NetworkConfig};

    fn tiny(relu: bool) -> NetworkConfig {
        NetworkConfig {
            num_conv_layers: 3,
            hidden_channels: 4,
            input_channels: 3,
            output_channels: 2,
            input_height: 3,
            input_width: 6,
            skip_concat_at: 2,
            batchnorm_epsilon: 1e-5,
            relu,
        }
    }

    #[test]
    fn layer_checks_pass() {
        assert!(conv2d_gradient_check(1, 1e-3).unwrap() < 1e-6);
        assert!(batchnorm_gradient_check(2, 1e-3).unwrap() < 1e-4);
    }

    #[test]
    fn network_checks_pass() {
        let lin = xavier_init::<f32>(&tiny(false), 5).unwrap();
        // Batch norm keeps the net curved, so a smaller step is needed to
        // push truncation error below the tolerance.
        let r = gradient_check(&lin, 1e-4).unwrap();
        assert_eq!(r.skipped, 0);
        assert!(r.max_relative_error < 1e-5, "{r:?}");
        let full = xavier_init::<f32>(&tiny(true), 5).unwrap();
        let r = gradient_check(&full, 1e-3).unwrap();
        assert!(r.checked > 0 && r.max_relative_error < 1e-3, "{r:?}");
    }

    #[test]
    fn zero_step_is_rejected() {
        let net = xavier_init::<f32>(&tiny(true), 5).unwrap();
        assert!(gradient_check(&net, 0.0).is_err());
        assert!(conv2d_gradient_check(0, 0.0).is_err());
    }
}
