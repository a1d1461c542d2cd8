//! The `deepbf` command sequence on a miniature configuration:
//! simulate, mask, train, evaluate, report and beamform, all inside one
//! output directory.
//!
//! `cargo run --example pipeline [output-dir]`

use std::path::Path;

use deepbf::cli::{self, BeamformRequest, MaskSource};
use deepbf::experiment::{ExperimentConfig, Method};
use deepbf::subsample::Scheme;

/// A configuration small enough to run every command in a few seconds.
pub fn miniature_config(output_dir: &Path) -> deepbf::Result<ExperimentConfig> {
    let text = r#"
        schema_version = 1
        seed = 5
        reproducible = true

        [probe]
        num_te_events = 8
        num_rx_active = 16
        num_depth_samples = 240

        [phantom]
        kind = "points"
        scatterers = [
            { lateral_m = 0.0, depth_m = 2.0e-3, amplitude = 1.0 },
            { lateral_m = 4.0e-4, depth_m = 3.5e-3, amplitude = 0.5 },
        ]

        [simulation]
        num_frames = 3
        noise_std = 0.05

        [subsampling]
        n_keep = [16, 8, 4]

        [network]
        num_conv_layers = 3
        hidden_channels = 4
        skip_concat_at = 2

        [training]
        train_frames = 2
        windows_per_frame = 8
        rates = [16, 8, 4]

        [training.optimizer]
        epochs = 3
        batch_size = 4
        lr_initial = 1e-2
        lr_final = 1e-3

        [evaluation]
        methods = ["das", "mv", "deepbf"]
        depth_min_m = 0.5e-3
        depth_max_m = 4.4e-3
        background = { shape = "rect", lateral_min_m = -7e-4, lateral_max_m = 7e-4, depth_min_m = 1.8e-3, depth_max_m = 2.2e-3 }
        anechoic = { shape = "disk", lateral_m = 0.0, depth_m = 1.0e-3, radius_m = 2e-4 }
    "#;
    let mut cfg = ExperimentConfig::from_toml(text)?;
    cfg.output_dir = output_dir.to_path_buf();
    Ok(cfg)
}

pub fn run_example(output_dir: &Path) -> deepbf::Result<Vec<deepbf::experiment::SummaryRow>> {
    let cfg = miniature_config(output_dir)?;
    cli::run_configured(&cfg, || {
        let sim = cli::cmd_simulate(&cfg)?;
        println!("simulate: {} frames of {:?}", sim.paths.len(), sim.dims);
        println!("mask: {} files", cli::cmd_mask(&cfg, &cfg.evaluation_frames())?.len());
        let train = cli::cmd_train(&cfg, |e, l| println!("train: epoch {e} loss {l:.4}"))?;
        println!("train: {} windows -> {}", train.samples, train.checkpoint.display());
        println!("evaluate: {} rows", cli::cmd_evaluate(&cfg)?.len());
        let summary = cli::cmd_report(&cfg)?;
        for s in &summary {
            println!(
                "report: {} {:>2} {:>6} PSNR {:.2}",
                s.scheme, s.n_keep, s.method, s.psnr
            );
        }
        let bf = cli::cmd_beamform(
            &cfg,
            &BeamformRequest {
                rf_path: sim.paths[2].clone(),
                method: Method::Deepbf,
                mask: MaskSource::Generated {
                    frame: 2,
                    scheme: Scheme::Variable,
                    n_keep: 4,
                },
                name: "frame2_deepbf_4".into(),
                dump_iq: false,
            },
        )?;
        println!("beamform: {}", bf.pgm.display());
        Ok(summary)
    })
}

#[allow(dead_code)]
fn main() -> deepbf::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "pipeline_out".into());
    run_example(Path::new(&dir)).map(|_| ())
}
