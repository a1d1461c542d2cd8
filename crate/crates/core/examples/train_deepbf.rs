//! Train a small deep beamformer on simulated speckle at mixed channel
//! counts, save and reload the checkpoint, and beamform a held-out frame
//! with only eight channels.
//!
//! `cargo run --example train_deepbf`

use deepbf::acquire::{compute_delay_table, CystPhantom};
use deepbf::experiment::{prepare_frame, simulate_frame, ExperimentConfig, PhantomSpec, TrainingSetBuilder};
use deepbf::neural::{infer_frame, train_with_progress, xavier_init, Checkpoint};
use deepbf::subsample::{apply_mask, make_mask, Scheme};

/// Per-epoch training losses.
pub fn run_example() -> deepbf::Result<Vec<f64>> {
    let mut cfg = ExperimentConfig::default();
    cfg.probe.num_te_events = 16;
    cfg.probe.num_rx_active = 16;
    cfg.probe.num_depth_samples = 320;
    cfg.phantom = PhantomSpec::Cyst(CystPhantom {
        lateral_min_m: -2e-3,
        lateral_max_m: 2e-3,
        depth_min_m: 1e-3,
        depth_max_m: 5.5e-3,
        cyst_lateral_m: 0.0,
        cyst_depth_m: 3.5e-3,
        cyst_radius_m: 1e-3,
        density_per_mm2: 10.0,
    });
    cfg.network.hidden_channels = Some(8);
    cfg.network.num_conv_layers = Some(4);
    cfg.network.skip_concat_at = Some(3);
    cfg.training.windows_per_frame = 48;
    cfg.training.depth_min_m = Some(1e-3);
    cfg.training.depth_max_m = Some(5.5e-3);
    cfg.evaluation.depth_min_m = 1e-3;
    cfg.evaluation.depth_max_m = 5.5e-3;
    cfg.subsampling.n_keep = vec![16, 8, 4];
    cfg.training.rates = vec![16, 8, 4];
    cfg.training.optimizer.epochs = 6;
    cfg.training.optimizer.batch_size = 4;
    cfg.training.optimizer.lr_initial = 2e-2;
    cfg.training.optimizer.lr_final = 2e-3;
    cfg.validate()?;

    let delays = compute_delay_table(&cfg.probe)?;
    let mut builder = TrainingSetBuilder::new();
    for f in 0..2 {
        builder.add_frame(&cfg, &prepare_frame(f, &simulate_frame(&cfg, f)?, &delays)?)?;
    }
    let set = builder.finish()?;
    let net = xavier_init::<f32>(&cfg.network_config(), 1)?;
    let outcome = train_with_progress(&set.samples, net, &cfg.training.optimizer, |e, loss| {
        println!("epoch {e}: loss {loss:.4}")
    })?;
    let checkpoint = Checkpoint {
        network: outcome.network,
        input_scale: set.input_scale,
        output_scale: set.output_scale,
        epoch_losses: outcome.epoch_losses,
    };
    let bytes = checkpoint.encode()?;
    let model = Checkpoint::decode(&bytes)?;
    println!("checkpoint: {} bytes", bytes.len());

    let held_out = prepare_frame(2, &simulate_frame(&cfg, 2)?, &delays)?;
    let mask = make_mask(
        Scheme::Variable,
        8,
        cfg.probe.num_rx_active,
        cfg.probe.num_depth_samples,
        3,
    )?;
    let iq = infer_frame(&model, &apply_mask(&held_out.cube, &mask)?)?;
    let (nl, nn) = iq.dims();
    println!("deep beamformer output: {nl} lines x {nn} samples of I/Q");
    Ok(model.epoch_losses)
}

#[allow(dead_code)]
fn main() -> deepbf::Result<()> {
    run_example().map(|_| ())
}
