use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{loss_mse, sgd_step, Mode, Network};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub weight_decay: f64,
    pub lr_initial: f64,
    pub lr_final: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            weight_decay: 1e-4,
            lr_initial: 1e-4,
            lr_final: 1e-7,
            epochs: 40,
            batch_size: 16,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.lr_initial >= 0.0 && self.lr_final >= 0.0 && self.weight_decay >= 0.0) {
            return bad("learning rates and weight decay must be non-negative");
        }
        if self.lr_final > self.lr_initial {
            return bad("lr_final must not exceed lr_initial");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive");
        }
        Ok(())
    }

    /// Log-linear decay from `lr_initial` at the first epoch to `lr_final`
    /// at the last.
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        if self.epochs <= 1 || self.lr_initial == self.lr_final {
            return self.lr_initial;
        }
        if self.lr_final == 0.0 {
            return if epoch + 1 == self.epochs { 0.0 } else { self.lr_initial };
        }
        let t = epoch as f64 / (self.epochs - 1) as f64;
        self.lr_initial * (self.lr_final / self.lr_initial).powf(t)
    }
}

/// One training pair: a `C x 3 x L` input window and its `2 x 3 x L` I/Q
/// target, both with batch size 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Tensor<f32>,
    pub target: Tensor<f32>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// The trained network, or the last good one after a divergence.
    pub network: Network<f32>,
    /// Mean training loss of every completed epoch.
    pub epoch_losses: Vec<f64>,
    /// Why training stopped early, if it did.
    pub diverged: Option<String>,
}

fn check_dataset(dataset: &[Sample], net: &Network<f32>) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    let c = net.config();
    let want_in = (c.input_channels, 1, c.input_height, c.input_width);
    let want_out = (c.output_channels, 1, c.input_height, c.input_width);
    for (i, s) in dataset.iter().enumerate() {
        if s.input.shape() != want_in || s.target.shape() != want_out {
            return Err(Error::DimensionMismatch(format!(
                "sample {i} is {:?} -> {:?}, network expects {want_in:?} -> {want_out:?}",
                s.input.shape(),
                s.target.shape()
            )));
        }
    }
    Ok(())
}

pub fn train(dataset: &[Sample], net: Network<f32>, tc: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(dataset, net, tc, |_, _| {})
}

/// [`train`] calling `progress(epoch, loss)` after every epoch.
pub fn train_with_progress(
    dataset: &[Sample],
    mut net: Network<f32>,
    tc: &TrainConfig,
    mut progress: impl FnMut(usize, f64),
) -> Result<TrainOutcome> {
    tc.validate()?;
    check_dataset(dataset, &net)?;
    net.set_mode(Mode::Train);
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut epoch_losses = Vec::with_capacity(tc.epochs);
    for epoch in 0..tc.epochs {
        let last_good = net.clone();
        let lr = tc.learning_rate(epoch);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut failure = None;
        for batch in order.chunks(tc.batch_size) {
            let inputs: Vec<&Tensor<f32>> = batch.iter().map(|&i| &dataset[i].input).collect();
            let targets: Vec<&Tensor<f32>> = batch.iter().map(|&i| &dataset[i].target).collect();
            let x = Tensor::stack(&inputs)?;
            let t = Tensor::stack(&targets)?;
            let (pred, cache) = net.forward_train(&x)?;
            let (loss, grad) = loss_mse(&pred, &t)?;
            if !loss.is_finite() {
                failure = Some(format!("loss became {loss} in epoch {epoch}"));
                break;
            }
            let grads = net.backward(&cache, &grad)?;
            if let Err(e) = sgd_step(&mut net, &grads, lr, tc.weight_decay) {
                failure = Some(format!("{e} in epoch {epoch}"));
                break;
            }
            if !net.is_finite() {
                failure = Some(format!("parameters became non-finite in epoch {epoch}"));
                break;
            }
            net.update_running_stats(&cache);
            total += loss * batch.len() as f64;
        }
        if let Some(reason) = failure {
            return Ok(TrainOutcome {
                network: last_good,
                epoch_losses,
                diverged: Some(reason),
            });
        }
        let mean = total / dataset.len() as f64;
        epoch_losses.push(mean);
        progress(epoch, mean);
    }
    net.set_mode(Mode::Eval);
    Ok(TrainOutcome {
        network: net,
        epoch_losses,
        diverged: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::network::{xavier_init, NetworkConfig};

    fn tiny() -> NetworkConfig {
        NetworkConfig {
            num_conv_layers: 3,
            hidden_channels: 4,
            input_channels: 4,
            output_channels: 2,
            input_height: 3,
            input_width: 8,
            skip_concat_at: 2,
            batchnorm_epsilon: 1e-5,
            relu: true,
        }
    }

    fn dataset(n: usize) -> Vec<Sample> {
        (0..n)
            .map(|s| {
                let input = Tensor::from_vec(
                    4,
                    1,
                    3,
                    8,
                    (0..96).map(|i| ((i * 7 + s * 13) as f32 * 0.1).sin()).collect(),
                )
                .unwrap();
                let target =
                    Tensor::from_vec(2, 1, 3, 8, (0..48).map(|i| ((i + s) as f32 * 0.3).cos()).collect()).unwrap();
                Sample { input, target }
            })
            .collect()
    }

    #[test]
    fn schedule_is_log_linear() {
        let tc = TrainConfig {
            epochs: 4,
            lr_initial: 1e-4,
            lr_final: 1e-7,
            ..Default::default()
        };
        let lrs: Vec<f64> = (0..4).map(|e| tc.learning_rate(e)).collect();
        for (got, want) in lrs.iter().zip([1e-4, 1e-5, 1e-6, 1e-7]) {
            assert!((got / want - 1.0).abs() < 1e-12);
        }
        let bad = TrainConfig {
            lr_final: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let net = xavier_init::<f32>(&tiny(), 1).unwrap();
        let tc = TrainConfig {
            lr_initial: 0.0,
            lr_final: 0.0,
            epochs: 3,
            batch_size: 1,
            ..Default::default()
        };
        let out = train(&dataset(4), net.clone(), &tc).unwrap();
        assert_eq!(out.epoch_losses.len(), 3);
        for (a, b) in out.network.parameters().iter().zip(net.parameters()) {
            assert_eq!(a.1, b.1);
        }
        // Single-sample batches see identical statistics in every epoch;
        // only the order of the epoch sum changes.
        assert!(out.epoch_losses.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-12 * w[0]));
    }

    #[test]
    fn training_is_reproducible_and_reduces_loss() {
        let tc = TrainConfig {
            lr_initial: 0.05,
            lr_final: 0.005,
            epochs: 30,
            batch_size: 3,
            seed: 9,
            ..Default::default()
        };
        let a = train(&dataset(6), xavier_init(&tiny(), 2).unwrap(), &tc).unwrap();
        let b = train(&dataset(6), xavier_init(&tiny(), 2).unwrap(), &tc).unwrap();
        assert_eq!(a.network, b.network);
        assert_eq!(a.epoch_losses, b.epoch_losses);
        assert!(a.diverged.is_none());
        assert!(a.epoch_losses.last().unwrap() < &a.epoch_losses[0]);
    }

    #[test]
    fn desk_network_overfits_one_sample() {
        use rand::Rng;
        let cfg = NetworkConfig::desk(96);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let input = Tensor::from_vec(
            64,
            1,
            3,
            96,
            (0..64 * 288).map(|_| rng.gen_range(-1.0f32..1.0)).collect(),
        )
        .unwrap();
        let target =
            Tensor::from_vec(2, 1, 3, 96, (0..2 * 288).map(|_| rng.gen_range(-1.0f32..1.0)).collect()).unwrap();
        let tc = TrainConfig {
            lr_initial: 3e-2,
            lr_final: 1e-3,
            epochs: 200,
            batch_size: 1,
            seed: 4,
            ..Default::default()
        };
        let out = train(&[Sample { input, target }], xavier_init(&cfg, 5).unwrap(), &tc).unwrap();
        assert!(out.diverged.is_none());
        let (first, last) = (out.epoch_losses[0], *out.epoch_losses.last().unwrap());
        assert!(last < 0.05 * first, "{first} -> {last}");
    }

    #[test]
    fn divergence_returns_last_good_network() {
        let tc = TrainConfig {
            lr_initial: 1e30,
            lr_final: 1e30,
            weight_decay: 0.0,
            epochs: 5,
            batch_size: 2,
            seed: 1,
        };
        let out = train(&dataset(4), xavier_init(&tiny(), 3).unwrap(), &tc).unwrap();
        assert!(out.diverged.is_some());
        assert!(out.epoch_losses.len() < 5);
        assert!(out
            .network
            .parameters()
            .iter()
            .all(|(_, p)| p.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn rejects_bad_inputs() {
        let net = xavier_init::<f32>(&tiny(), 1).unwrap();
        assert!(train(&[], net.clone(), &TrainConfig::default()).is_err());
        let mut d = dataset(1);
        d[0].target = Tensor::zeros(3, 1, 3, 8);
        assert!(train(&d, net, &TrainConfig::default()).is_err());
    }
}
