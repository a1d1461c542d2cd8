//! The six `deepbf` subcommands as library functions.
//!
//! Every command takes a validated [`ExperimentConfig`] and writes only
//! below `cfg.output_dir`:
//!
//! | command    | artifacts                                       |
//! |------------|-------------------------------------------------|
//! | `simulate` | `rf/frame_NNNN.usrf`                            |
//! | `mask`     | `masks/frame_NNNN_<scheme>_<n_keep>.txt`        |
//! | `beamform` | `images/<name>.pgm`, optionally `<name>_iq.csv` |
//! | `train`    | `model.udbf`, `train_loss.csv`                  |
//! | `evaluate` | `metrics.csv`                                   |
//! | `report`   | `summary.csv`                                   |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::acquire::{compute_delay_table, read_rf, write_rf, RFFrame};
use crate::beamform::time_align;
use crate::error::{Error, Result};
use crate::experiment::{
    beamform_iq, evaluate_frame, frame_mask, prepare_frame, simulate_frame, summarize, ExperimentConfig, Method,
    SummaryRow, TrainingSetBuilder,
};
use crate::metrics::{metrics_csv, parse_metrics_csv, MetricsRow};
use crate::neural::{train_with_progress, xavier_init, Checkpoint};
use crate::postproc::{bmode_from_iq, IQImage};
use crate::subsample::{apply_mask, SamplingMask, Scheme};

pub const MODEL_FILE: &str = "model.udbf";
pub const LOSS_FILE: &str = "train_loss.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const LOSS_CSV_HEADER: &str = "epoch,learning_rate,loss";
pub const SUMMARY_CSV_HEADER: &str = "scheme,n_keep,method,frames,CNR,GCNR,PSNR,SSIM";

pub fn rf_path(cfg: &ExperimentConfig, frame: usize) -> PathBuf {
    cfg.output_dir.join("rf").join(format!("frame_{frame:04}.usrf"))
}

pub fn mask_path(cfg: &ExperimentConfig, frame: usize, scheme: Scheme, n_keep: usize) -> PathBuf {
    cfg.output_dir
        .join("masks")
        .join(format!("frame_{frame:04}_{}_{n_keep:02}.txt", scheme.as_str()))
}

/// Checkpoint used by `beamform` and `evaluate`.
pub fn model_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.beamformer
        .checkpoint
        .clone()
        .unwrap_or_else(|| cfg.output_dir.join(MODEL_FILE))
}

/// Loads the checkpoint for `deepbf`; a missing file is a usage error.
pub fn load_model(cfg: &ExperimentConfig) -> Result<Checkpoint> {
    let path = model_path(cfg);
    if !path.exists() {
        return Err(Error::InvalidArgument(format!(
            "deepbf needs a trained checkpoint, {} does not exist",
            path.display()
        )));
    }
    Checkpoint::read(path)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs `f` on a single thread when the configuration asks for
/// reproducible execution, otherwise on the global pool.
pub fn run_configured<T: Send>(cfg: &ExperimentConfig, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if !cfg.reproducible {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?
        .install(f)
}

fn probe_dims(cfg: &ExperimentConfig) -> (usize, usize, usize) {
    let p = &cfg.probe;
    (p.num_te_events, p.num_rx_active, p.num_depth_samples)
}

/// Reads a frame written by `simulate`.
pub fn load_frame(cfg: &ExperimentConfig, frame: usize) -> Result<RFFrame> {
    let rf = read_rf(rf_path(cfg, frame))?;
    if rf.dims() != probe_dims(cfg) {
        return Err(Error::DimensionMismatch(format!(
            "frame {frame} has dims {:?}, configuration expects {:?}",
            rf.dims(),
            probe_dims(cfg)
        )));
    }
    Ok(rf)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateReport {
    pub paths: Vec<PathBuf>,
    /// `(L, J, N)` of every frame.
    pub dims: (usize, usize, usize),
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<SimulateReport> {
    create_dir(&cfg.output_dir.join("rf"))?;
    let paths = (0..cfg.simulation.num_frames)
        .into_par_iter()
        .map(|f| {
            let rf = simulate_frame(cfg, f)?;
            let path = rf_path(cfg, f);
            write_rf(&rf, &path)?;
            Ok(path)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulateReport {
        paths,
        dims: probe_dims(cfg),
    })
}

/// Writes the masks of `frames` for every configured scheme and rate.
pub fn cmd_mask(cfg: &ExperimentConfig, frames: &[usize]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for &f in frames {
        for &scheme in &cfg.subsampling.schemes {
            for &n_keep in &cfg.subsampling.n_keep {
                let path = mask_path(cfg, f, scheme, n_keep);
                write_text(&path, &frame_mask(cfg, f, scheme, n_keep)?.to_text())?;
                paths.push(path);
            }
        }
    }
    Ok(paths)
}

/// Where the receive mask of a `beamform` run comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MaskSource {
    Full,
    File(PathBuf),
    /// The mask `mask` would write for this frame.
    Generated {
        frame: usize,
        scheme: Scheme,
        n_keep: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformRequest {
    pub rf_path: PathBuf,
    pub method: Method,
    pub mask: MaskSource,
    /// Output stem inside `images/`.
    pub name: String,
    pub dump_iq: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformReport {
    pub pgm: PathBuf,
    pub iq: Option<PathBuf>,
    pub dims: (usize, usize),
}

pub fn iq_csv(iq: &IQImage) -> String {
    let (nl, nn) = iq.dims();
    let mut out = String::from("line,sample,i,q\n");
    for l in 0..nl {
        for n in 0..nn {
            writeln!(out, "{l},{n},{:e},{:e}", iq.i.get(l, n), iq.q.get(l, n)).expect("string write");
        }
    }
    out
}

pub fn cmd_beamform(cfg: &ExperimentConfig, req: &BeamformRequest) -> Result<BeamformReport> {
    if req.name.is_empty() || req.name.contains(['/', '\\']) || req.name.starts_with('.') {
        return Err(Error::InvalidArgument(format!("bad output name {:?}", req.name)));
    }
    let model = match req.method {
        Method::Deepbf => Some(load_model(cfg)?),
        _ => None,
    };
    let rf = read_rf(&req.rf_path)?;
    let delays = compute_delay_table(rf.probe())?;
    let cube = time_align(&rf, &delays)?;
    let mask: Option<SamplingMask> = match &req.mask {
        MaskSource::Full => None,
        MaskSource::File(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Some(SamplingMask::from_text(&text)?)
        }
        MaskSource::Generated { frame, scheme, n_keep } => {
            let mut c = cfg.clone();
            c.probe = *rf.probe();
            Some(frame_mask(&c, *frame, *scheme, *n_keep)?)
        }
    };
    let cube = match &mask {
        Some(m) => apply_mask(&cube, m)?,
        None => cube,
    };
    let iq = beamform_iq(req.method, &cube, Some(&cfg.mv_params()), model.as_ref())?;
    let img = bmode_from_iq(&iq, cfg.beamformer.dynamic_range_db)?;
    let dir = cfg.output_dir.join("images");
    create_dir(&dir)?;
    let pgm = dir.join(format!("{}.pgm", req.name));
    img.write_pgm(&pgm)?;
    let iq_path = if req.dump_iq {
        let p = dir.join(format!("{}_iq.csv", req.name));
        write_text(&p, &iq_csv(&iq))?;
        Some(p)
    } else {
        None
    };
    Ok(BeamformReport {
        pgm,
        iq: iq_path,
        dims: img.dims(),
    })
}

pub fn loss_csv(losses: &[f64], cfg: &ExperimentConfig) -> String {
    let mut out = format!("{LOSS_CSV_HEADER}\n");
    for (e, l) in losses.iter().enumerate() {
        writeln!(out, "{e},{:e},{l:e}", cfg.training.optimizer.learning_rate(e)).expect("string write");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub checkpoint: PathBuf,
    pub loss_csv: PathBuf,
    pub samples: usize,
    pub epoch_losses: Vec<f64>,
}

/// Trains on frames `0..train_frames`. If training diverges the last good
/// network is still written and the error is returned afterwards.
pub fn cmd_train(cfg: &ExperimentConfig, mut progress: impl FnMut(usize, f64)) -> Result<TrainReport> {
    if cfg.training.train_frames == 0 {
        return Err(Error::Config("training.train_frames must be positive".into()));
    }
    let delays = compute_delay_table(&cfg.probe)?;
    let mut builder = TrainingSetBuilder::new();
    for f in 0..cfg.training.train_frames {
        let frame = prepare_frame(f, &load_frame(cfg, f)?, &delays)?;
        builder.add_frame(cfg, &frame)?;
    }
    let set = builder.finish()?;
    let net = xavier_init::<f32>(&cfg.network_config(), cfg.training.optimizer.seed)?;
    let outcome = train_with_progress(&set.samples, net, &cfg.training.optimizer, &mut progress)?;
    let ck = Checkpoint {
        network: outcome.network,
        input_scale: set.input_scale,
        output_scale: set.output_scale,
        epoch_losses: outcome.epoch_losses,
    };
    create_dir(&cfg.output_dir)?;
    let checkpoint = cfg.output_dir.join(MODEL_FILE);
    ck.write(&checkpoint)?;
    let loss_path = cfg.output_dir.join(LOSS_FILE);
    write_text(&loss_path, &loss_csv(&ck.epoch_losses, cfg))?;
    if let Some(reason) = outcome.diverged {
        return Err(Error::Numeric(format!(
            "training diverged ({reason}); last good network written to {}",
            checkpoint.display()
        )));
    }
    Ok(TrainReport {
        checkpoint,
        loss_csv: loss_path,
        samples: set.samples.len(),
        epoch_losses: ck.epoch_losses,
    })
}

/// Scores the evaluation frames and writes `metrics.csv`.
pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<Vec<MetricsRow>> {
    let model = if cfg.evaluation.methods.contains(&Method::Deepbf) {
        Some(load_model(cfg)?)
    } else {
        None
    };
    let frames = cfg.evaluation_frames();
    if frames.is_empty() {
        return Err(Error::Config(
            "no evaluation frames (all frames are used for training)".into(),
        ));
    }
    let delays = compute_delay_table(&cfg.probe)?;
    let per_frame = frames
        .par_iter()
        .map(|&f| {
            let frame = prepare_frame(f, &load_frame(cfg, f)?, &delays)?;
            evaluate_frame(cfg, &frame, model.as_ref())
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<MetricsRow> = per_frame.into_iter().flatten().collect();
    write_text(&cfg.output_dir.join(METRICS_FILE), &metrics_csv(&rows))?;
    Ok(rows)
}

pub fn summary_csv(summary: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_CSV_HEADER}\n");
    for s in summary {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.scheme, s.n_keep, s.method, s.frames, s.cnr, s.gcnr, s.psnr, s.ssim
        )
        .expect("string write");
    }
    out
}

/// Means of `metrics.csv` per scheme, rate and method, written to
/// `summary.csv`.
pub fn cmd_report(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    let path = cfg.output_dir.join(METRICS_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let summary = summarize(&parse_metrics_csv(&text)?);
    write_text(&cfg.output_dir.join(SUMMARY_FILE), &summary_csv(&summary))?;
    Ok(summary)
}
