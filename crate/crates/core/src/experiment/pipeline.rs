use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Method};
use crate::acquire::{simulate_rf, DelayTable, RFFrame};
use crate::beamform::{das, mv_beamform, time_align, Apodization, MvParams, TimeAlignedCube};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::metrics::{cnr, gcnr, psnr, ssim, MetricsRow, SsimParams};
use crate::neural::{infer_frame, window_input, window_target, Checkpoint, Sample, Tensor, WINDOW_DEPTH};
use crate::postproc::{bmode_from_iq, hilbert_analytic, BModeImage, IQImage};
use crate::subsample::{apply_mask, make_mask, SamplingMask, Scheme};

const STREAM_PHANTOM: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_MASK: u64 = 3;
const STREAM_TRAIN: u64 = 4;

/// Independent seed for `(stream, index)` derived from `base` (SplitMix64).
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn simulate_frame(cfg: &ExperimentConfig, frame: usize) -> Result<RFFrame> {
    let phantom = cfg.phantom.build(derive_seed(cfg.seed, STREAM_PHANTOM, frame as u64))?;
    simulate_rf(
        &cfg.probe,
        &phantom,
        cfg.simulation.noise_std,
        derive_seed(cfg.seed, STREAM_NOISE, frame as u64),
    )
}

/// The receive mask used for `frame` at one rate.
pub fn frame_mask(cfg: &ExperimentConfig, frame: usize, scheme: Scheme, n_keep: usize) -> Result<SamplingMask> {
    let tag = ((frame as u64) << 16) ^ ((n_keep as u64) << 1) ^ (scheme == Scheme::Fixed) as u64;
    make_mask(
        scheme,
        n_keep,
        cfg.probe.num_rx_active,
        cfg.probe.num_depth_samples,
        derive_seed(cfg.subsampling.seed, STREAM_MASK, tag),
    )
}

/// An aligned frame with its full-aperture DAS reference.
#[derive(Debug, Clone)]
pub struct PreparedFrame {
    pub index: usize,
    pub cube: TimeAlignedCube,
    pub reference: IQImage,
}

pub fn prepare_frame(index: usize, rf: &RFFrame, delays: &DelayTable) -> Result<PreparedFrame> {
    let cube = time_align(rf, delays)?;
    let reference = beamform_iq(Method::Das, &cube, None, None)?;
    Ok(PreparedFrame { index, cube, reference })
}

/// I/Q image of an aligned (possibly masked) cube. DAS and MV go through
/// the Hilbert transform; the network produces I/Q directly.
pub fn beamform_iq(
    method: Method,
    cube: &TimeAlignedCube,
    mv: Option<&MvParams>,
    model: Option<&Checkpoint>,
) -> Result<IQImage> {
    match method {
        Method::Das => hilbert_analytic(&das(cube, &Apodization::Uniform)?),
        Method::Mv => {
            let params = mv.copied().unwrap_or_else(|| MvParams::for_aperture(cube.dims().1));
            hilbert_analytic(&mv_beamform(cube, &params)?.image)
        }
        Method::Deepbf => {
            let model = model.ok_or_else(|| Error::InvalidArgument("deepbf needs a trained checkpoint".into()))?;
            infer_frame(model, cube)
        }
    }
}

/// Training windows with the scale factors that bring inputs and targets
/// to unit RMS.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub samples: Vec<Sample>,
    pub input_scale: f32,
    pub output_scale: f32,
}

fn rms(values: impl Iterator<Item = f32>) -> f64 {
    let (mut sum, mut count) = (0.0f64, 0usize);
    for v in values {
        sum += v as f64 * v as f64;
        count += 1;
    }
    (sum / count.max(1) as f64).sqrt()
}

fn mask_window(input: &mut Tensor<f32>, mask: &SamplingMask) {
    let w = input.width;
    for j in 0..input.channels {
        for r in 0..WINDOW_DEPTH {
            if !mask.keep(r, j) {
                input.data[(j * WINDOW_DEPTH + r) * w..][..w].fill(0.0);
            }
        }
    }
}

/// Accumulates training windows one frame at a time so that frames can be
/// dropped as soon as their windows are cut.
#[derive(Debug, Clone, Default)]
pub struct TrainingSetBuilder {
    samples: Vec<Sample>,
    input_sum_sq: f64,
    input_count: usize,
}

impl TrainingSetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Draws `windows_per_frame` windows from `frame`, each masked at a rate
    /// drawn uniformly from the training rates.
    pub fn add_frame(&mut self, cfg: &ExperimentConfig, frame: &PreparedFrame) -> Result<()> {
        let (d0, d1) = cfg.training_depth_range()?;
        let j = cfg.probe.num_rx_active;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_TRAIN, frame.index as u64));
        for _ in 0..cfg.training.windows_per_frame {
            let n0 = rng.gen_range(d0..=d1 - WINDOW_DEPTH);
            let n_keep = *cfg.training.rates.choose(&mut rng).expect("rates validated non-empty");
            let mask = make_mask(cfg.training.scheme, n_keep, j, WINDOW_DEPTH, rng.gen())?;
            let mut input = window_input(&frame.cube, n0, 1.0)?;
            self.input_sum_sq += input.data.iter().map(|&v| v as f64 * v as f64).sum::<f64>();
            self.input_count += input.data.len();
            mask_window(&mut input, &mask);
            let target = window_target(&frame.reference, n0, 1.0)?;
            self.samples.push(Sample { input, target });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Scales inputs by the RMS of the unmasked windows and targets by their
    /// own RMS.
    pub fn finish(mut self) -> Result<TrainingSet> {
        if self.samples.is_empty() {
            return Err(Error::InvalidArgument("no training frames".into()));
        }
        let in_rms = (self.input_sum_sq / self.input_count as f64).sqrt();
        let out_rms = rms(self.samples.iter().flat_map(|s| s.target.data.iter().copied()));
        if !(in_rms > 0.0 && out_rms > 0.0) {
            return Err(Error::Numeric("training data is identically zero".into()));
        }
        let input_scale = (1.0 / in_rms) as f32;
        let output_scale = (1.0 / out_rms) as f32;
        for s in &mut self.samples {
            s.input.data.iter_mut().for_each(|v| *v *= input_scale);
            s.target.data.iter_mut().for_each(|v| *v *= output_scale);
        }
        Ok(TrainingSet {
            samples: self.samples,
            input_scale,
            output_scale,
        })
    }
}

/// Training set over in-memory frames; see [`TrainingSetBuilder`].
pub fn build_training_set(cfg: &ExperimentConfig, frames: &[PreparedFrame]) -> Result<TrainingSet> {
    let mut builder = TrainingSetBuilder::new();
    for f in frames {
        builder.add_frame(cfg, f)?;
    }
    builder.finish()
}

/// Image and regions used for scoring one frame.
struct Scoring {
    n0: usize,
    n1: usize,
    background: crate::metrics::Region,
    anechoic: crate::metrics::Region,
    reference: Grid,
}

fn crop(img: &BModeImage, n0: usize, n1: usize) -> Result<Grid> {
    img.to_grid().crop_depth(n0, n1)
}

/// Metric rows for one frame over every configured scheme, rate and method.
pub fn evaluate_frame(
    cfg: &ExperimentConfig,
    frame: &PreparedFrame,
    model: Option<&Checkpoint>,
) -> Result<Vec<MetricsRow>> {
    let dr = cfg.beamformer.dynamic_range_db;
    let (n0, n1) = cfg.evaluation_depth_range()?;
    let reference = crop(&bmode_from_iq(&frame.reference, dr)?, n0, n1)?;
    let scoring = Scoring {
        n0,
        n1,
        background: cfg.evaluation.background.to_region(&cfg.probe, n0)?,
        anechoic: cfg.evaluation.anechoic.to_region(&cfg.probe, n0)?,
        reference,
    };
    let mv = cfg.mv_params();
    let mut rows = Vec::new();
    for &scheme in &cfg.subsampling.schemes {
        for &n_keep in &cfg.subsampling.n_keep {
            let mask = frame_mask(cfg, frame.index, scheme, n_keep)?;
            let masked = apply_mask(&frame.cube, &mask)?;
            for &method in &cfg.evaluation.methods {
                let iq = beamform_iq(method, &masked, Some(&mv), model)?;
                let img = crop(&bmode_from_iq(&iq, dr)?, scoring.n0, scoring.n1)?;
                rows.push(MetricsRow {
                    frame: frame.index,
                    scheme: scheme.as_str().to_string(),
                    n_keep,
                    method: method.as_str().to_string(),
                    cnr: cnr(&img, &scoring.background, &scoring.anechoic)?,
                    gcnr: gcnr(&img, &scoring.background, &scoring.anechoic, cfg.evaluation.gcnr_bins)?,
                    psnr: psnr(&scoring.reference, &img, 255.0)?,
                    ssim: ssim(&scoring.reference, &img, &SsimParams::default())?,
                });
            }
        }
    }
    Ok(rows)
}

/// Means of each metric over rows sharing `(scheme, n_keep, method)`, in
/// first-seen order.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: String,
    pub n_keep: usize,
    pub method: String,
    pub frames: usize,
    pub cnr: f64,
    pub gcnr: f64,
    pub psnr: f64,
    pub ssim: f64,
}

pub fn summarize(rows: &[MetricsRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    for r in rows {
        let idx = match out
            .iter()
            .position(|s| s.scheme == r.scheme && s.n_keep == r.n_keep && s.method == r.method)
        {
            Some(i) => i,
            None => {
                out.push(SummaryRow {
                    scheme: r.scheme.clone(),
                    n_keep: r.n_keep,
                    method: r.method.clone(),
                    frames: 0,
                    cnr: 0.0,
                    gcnr: 0.0,
                    psnr: 0.0,
                    ssim: 0.0,
                });
                out.len() - 1
            }
        };
        let s = &mut out[idx];
        s.frames += 1;
        s.cnr += r.cnr;
        s.gcnr += r.gcnr;
        s.psnr += r.psnr;
        s.ssim += r.ssim;
    }
    for s in &mut out {
        let n = s.frames as f64;
        s.cnr /= n;
        s.gcnr /= n;
        s.psnr /= n;
        s.ssim /= n;
    }
    out
}
