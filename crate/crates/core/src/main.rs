use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deepbf::cli::{self, BeamformRequest, MaskSource};
use deepbf::experiment::{ExperimentConfig, Method};
use deepbf::subsample::Scheme;
use deepbf::{Error, Result};

/// Focused ultrasound reconstruction with DAS, MV and a trained deep beamformer.
#[derive(Parser)]
#[command(name = "deepbf", version)]
struct Cli {
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Single-threaded, bit-reproducible execution.
    #[arg(long, global = true)]
    reproducible: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate RF frames into rf/.
    Simulate {
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        noise_std: Option<f64>,
    },
    /// Write receive masks into masks/.
    Mask {
        /// Frames to write masks for; the evaluation frames by default.
        #[arg(long = "frame")]
        frames: Vec<usize>,
    },
    /// Beamform one RF file into images/<name>.pgm.
    Beamform(BeamformArgs),
    /// Train the network on the training frames.
    Train {
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr_initial: Option<f64>,
        #[arg(long)]
        lr_final: Option<f64>,
    },
    /// Score the evaluation frames into metrics.csv.
    Evaluate {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Summarize metrics.csv into summary.csv.
    Report,
}

#[derive(Args)]
struct BeamformArgs {
    #[arg(long)]
    rf: PathBuf,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Mask text file.
    #[arg(long, conflicts_with = "n_keep")]
    mask: Option<PathBuf>,
    /// Generate the mask for `--frame` at this many channels.
    #[arg(long)]
    n_keep: Option<usize>,
    #[arg(long, default_value = "variable", value_parser = parse_scheme)]
    scheme: Scheme,
    #[arg(long, default_value_t = 0)]
    frame: usize,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value = "image")]
    name: String,
    /// Also write the I/Q samples as CSV.
    #[arg(long)]
    dump_iq: bool,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load_config(cli: &mut Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(d) = &cli.output_dir {
        cfg.output_dir = d.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.reproducible |= cli.reproducible;
    match &mut cli.command {
        Command::Simulate { frames, noise_std } => {
            if let Some(f) = frames {
                cfg.simulation.num_frames = *f;
                cfg.training.train_frames = cfg.training.train_frames.min(*f);
            }
            if let Some(n) = noise_std {
                cfg.simulation.noise_std = *n;
            }
        }
        Command::Train {
            epochs,
            batch_size,
            lr_initial,
            lr_final,
        } => {
            let o = &mut cfg.training.optimizer;
            if let Some(e) = epochs {
                o.epochs = *e;
            }
            if let Some(b) = batch_size {
                o.batch_size = *b;
            }
            if let Some(l) = lr_initial {
                o.lr_initial = *l;
            }
            if let Some(l) = lr_final {
                o.lr_final = *l;
            }
        }
        Command::Evaluate { checkpoint } => {
            if let Some(c) = checkpoint.take() {
                cfg.beamformer.checkpoint = Some(c);
            }
        }
        Command::Beamform(a) => {
            if let Some(c) = a.checkpoint.take() {
                cfg.beamformer.checkpoint = Some(c);
            }
        }
        Command::Mask { .. } | Command::Report => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(mut cli: Cli) -> Result<()> {
    let cfg = load_config(&mut cli)?;
    cli::run_configured(&cfg, || match cli.command {
        Command::Simulate { .. } => {
            let r = cli::cmd_simulate(&cfg)?;
            let (l, j, n) = r.dims;
            println!(
                "wrote {} frames of {l} lines x {j} channels x {n} samples",
                r.paths.len()
            );
            Ok(())
        }
        Command::Mask { frames } => {
            let frames = if frames.is_empty() {
                cfg.evaluation_frames()
            } else {
                frames
            };
            let paths = cli::cmd_mask(&cfg, &frames)?;
            println!("wrote {} masks", paths.len());
            Ok(())
        }
        Command::Beamform(a) => {
            let mask = match (a.mask, a.n_keep) {
                (Some(p), _) => MaskSource::File(p),
                (None, Some(n_keep)) => MaskSource::Generated {
                    frame: a.frame,
                    scheme: a.scheme,
                    n_keep,
                },
                (None, None) => MaskSource::Full,
            };
            let r = cli::cmd_beamform(
                &cfg,
                &BeamformRequest {
                    rf_path: a.rf,
                    method: a.method,
                    mask,
                    name: a.name,
                    dump_iq: a.dump_iq,
                },
            )?;
            println!("wrote {} ({} x {})", r.pgm.display(), r.dims.0, r.dims.1);
            Ok(())
        }
        Command::Train { .. } => {
            let r = cli::cmd_train(&cfg, |e, l| eprintln!("epoch {e}: loss {l:.6}"))?;
            println!("trained on {} windows, wrote {}", r.samples, r.checkpoint.display());
            Ok(())
        }
        Command::Evaluate { .. } => {
            let rows = cli::cmd_evaluate(&cfg)?;
            println!("wrote {} metric rows", rows.len());
            Ok(())
        }
        Command::Report => {
            for s in cli::cmd_report(&cfg)? {
                println!(
                    "{:>8} {:>3} {:>6}  CNR {:6.3}  GCNR {:5.3}  PSNR {:6.2}  SSIM {:5.3}",
                    s.scheme, s.n_keep, s.method, s.cnr, s.gcnr, s.psnr, s.ssim
                );
            }
            Ok(())
        }
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("deepbf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
