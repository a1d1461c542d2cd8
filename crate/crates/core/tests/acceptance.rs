//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.
//!
//! `cargo test --test acceptance` runs everything; `cargo test --test
//! acceptance -- 1 5 10` runs a subset.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use deepbf::acquire::{compute_delay_table, simulate_rf, Phantom, ProbeConfig, Scatterer};
use deepbf::beamform::{
    das, mv_beamform, mv_weights, time_align, Apodization, Covariance, MvParams, ScanlineImage, TimeAlignedCube,
};
use deepbf::cli;
use deepbf::experiment::{
    evaluate_frame, prepare_frame, simulate_frame, summarize, ExperimentConfig, SummaryRow, TrainingSetBuilder,
};
use deepbf::grid::Grid;
use deepbf::metrics::{cnr, fwhm, gcnr, psnr, ssim, Region, SsimParams};
use deepbf::neural::{
    batchnorm_gradient_check, conv2d_gradient_check, gradient_check, train_with_progress, xavier_init, Checkpoint,
    NetworkConfig, Tensor,
};
use deepbf::postproc::{bmode_from_iq, envelope, hilbert_analytic};
use rand::{Rng, SeedableRng};

#[allow(dead_code)]
#[path = "../examples/pipeline.rs"]
mod pipeline;
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let t = start.elapsed();
    (
        t <= limit,
        format!("{:.1} s (limit {} s)", t.as_secs_f64(), limit.as_secs()),
    )
}

fn random_cube(rng: &mut ChaCha8Rng, l: usize, j: usize, n: usize) -> TimeAlignedCube {
    TimeAlignedCube::from_fn(l, j, n, |_, _, _| rng.gen_range(-1.0..1.0)).unwrap()
}

// 1. DAS linearity, MV gain constraint, MV = uniform weights for R = I.
fn beamforming_identities() -> deepbf::Result<Verdict> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut lin_err = 0f64;
    for _ in 0..10 {
        let (x, y) = (random_cube(&mut rng, 4, 16, 64), random_cube(&mut rng, 4, 16, 64));
        let (a, b) = (rng.gen_range(-2.0f32..2.0), rng.gen_range(-2.0f32..2.0));
        let lhs = das(&x.combine(a, &y, b)?, &Apodization::Uniform)?;
        let (dx, dy) = (das(&x, &Apodization::Uniform)?, das(&y, &Apodization::Uniform)?);
        for i in 0..lhs.data().len() {
            let rhs = a as f64 * dx.data()[i] + b as f64 * dy.data()[i];
            lin_err = lin_err.max((lhs.data()[i] - rhs).abs() / (1.0 + rhs.abs()));
        }
    }

    // Gain constraint and agreement with a nalgebra solve on random SPD matrices.
    let mut gain_err = 0f64;
    let mut oracle_err = 0f64;
    for k in [2usize, 5, 16, 32] {
        let a = nalgebra::DMatrix::<f64>::from_fn(k, k + 3, |_, _| rng.gen_range(-1.0..1.0));
        let r = &a * a.transpose() + nalgebra::DMatrix::identity(k, k) * 0.1;
        let cov = Covariance {
            dim: k,
            values: (0..k * k).map(|i| r[(i / k, i % k)]).collect(),
        };
        let w = mv_weights(&cov).expect("SPD matrix");
        let ones = nalgebra::DVector::from_element(k, 1.0);
        let rinv_a = r.clone().cholesky().expect("SPD").solve(&ones);
        let oracle = &rinv_a / ones.dot(&rinv_a);
        gain_err = gain_err.max((w.iter().sum::<f64>() - 1.0).abs());
        for i in 0..k {
            oracle_err = oracle_err.max((w[i] - oracle[i]).abs() / oracle[i].abs().max(1e-12));
        }
    }

    let mut uniform_err = 0f64;
    for k in [1usize, 4, 32] {
        let cov = Covariance {
            dim: k,
            values: (0..k * k).map(|i| if i / k == i % k { 1.0 } else { 0.0 }).collect(),
        };
        for w in mv_weights(&cov).expect("identity") {
            uniform_err = uniform_err.max((w - 1.0 / k as f64).abs());
        }
    }

    // K = 1 reduces MV to the uniform mean.
    let c = random_cube(&mut rng, 3, 8, 40);
    let mv = mv_beamform(
        &c,
        &MvParams {
            subaperture_len: 1,
            temporal_halfwidth: 1,
            loading_factor: 1e-2,
        },
    )?;
    let d = das(&c, &Apodization::Uniform)?;
    let k1_err = mv
        .image
        .data()
        .iter()
        .zip(d.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let (fast, time) = within(Duration::from_secs(10), start);
    let pass =
        lin_err <= 1e-6 && gain_err <= 1e-6 && oracle_err <= 1e-6 && uniform_err <= 1e-12 && k1_err <= 1e-6 && fast;
    Ok(verdict(
        pass,
        format!(
            "DAS linearity {lin_err:.1e}, |w^T a - 1| {gain_err:.1e}, weights vs solve {oracle_err:.1e}, R=I {uniform_err:.1e}, K=1 vs DAS {k1_err:.1e}, {time}"
        ),
    ))
}

// 2. Point-target localization.
fn point_target_localization() -> deepbf::Result<Verdict> {
    let start = Instant::now();
    let probe = ProbeConfig {
        num_te_events: 32,
        num_depth_samples: 1400,
        ..ProbeConfig::default()
    };
    let delays = compute_delay_table(&probe)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = (0f64, 0f64);
    let mut notes = Vec::new();
    for trial in 0..3 {
        let depth = rng.gen_range(5e-3..25e-3);
        let line = 16;
        let phantom = Phantom::new(vec![Scatterer {
            lateral_m: probe.scanline_lateral(line),
            depth_m: depth,
            amplitude: 1.0,
        }])?;
        let frame = simulate_rf(&probe, &phantom, 0.0, trial)?;
        let img = bmode_from_iq(
            &hilbert_analytic(&das(&time_align(&frame, &delays)?, &Apodization::Uniform)?)?,
            60.0,
        )?;
        let env = img.to_grid();
        let (nl, nn) = env.dims();
        let mut best = (0, 0, -1.0);
        for l in 0..nl {
            for n in 0..nn {
                if env.get(l, n) > best.2 {
                    best = (l, n, env.get(l, n));
                }
            }
        }
        let expected_n = 2.0 * depth / probe.sound_speed_m_s * probe.sampling_freq_hz;
        let dl = (best.0 as f64 - line as f64).abs();
        let dn = (best.1 as f64 - expected_n).abs();
        worst = (worst.0.max(dl), worst.1.max(dn));
        notes.push(format!(
            "{:.2} mm: ({}, {}) vs ({line}, {expected_n:.1})",
            depth * 1e3,
            best.0,
            best.1
        ));
    }
    let (fast, time) = within(Duration::from_secs(30), start);
    Ok(verdict(
        worst.0 <= 1.0 && worst.1 <= 2.0 && fast,
        format!(
            "{}; worst offset {} lines, {:.2} samples, {time}",
            notes.join("; "),
            worst.0,
            worst.1
        ),
    ))
}

// 3. MV lateral FWHM <= DAS lateral FWHM on two scatterers at 30 mm.
fn resolution_ordering() -> deepbf::Result<Verdict> {
    let probe = ProbeConfig {
        num_te_events: 24,
        num_depth_samples: 1700,
        ..ProbeConfig::default()
    };
    let depth = 30e-3;
    let phantom = Phantom::new(
        [10usize, 13]
            .iter()
            .map(|&l| Scatterer {
                lateral_m: probe.scanline_lateral(l),
                depth_m: depth,
                amplitude: 1.0,
            })
            .collect(),
    )?;
    let frame = simulate_rf(&probe, &phantom, 0.0, 3)?;
    let cube = time_align(&frame, &compute_delay_table(&probe)?)?;
    let das_env = envelope(&hilbert_analytic(&das(&cube, &Apodization::Uniform)?)?);
    let spatial = MvParams {
        temporal_halfwidth: 0,
        ..MvParams::for_aperture(probe.num_rx_active)
    };
    let mv_env = envelope(&hilbert_analytic(&mv_beamform(&cube, &spatial)?.image)?);
    let mv_default = envelope(&hilbert_analytic(
        &mv_beamform(&cube, &MvParams::for_aperture(probe.num_rx_active))?.image,
    )?);
    let n0 = probe.sample_of_depth(depth).round() as usize;
    // Lateral profile through the brightest pixel near the scatterer depth.
    let profile_width = |env: &Grid| -> Option<f64> {
        let (nl, _) = env.dims();
        let row = (n0 - 30..n0 + 30).max_by(|&a, &b| {
            let s = |r: usize| (0..nl).map(|l| env.get(l, r)).fold(0.0, f64::max);
            s(a).total_cmp(&s(b))
        })?;
        fwhm(&(0..nl).map(|l| env.get(l, row)).collect::<Vec<_>>())
    };
    let (d, m, md) = (
        profile_width(&das_env),
        profile_width(&mv_env),
        profile_width(&mv_default),
    );
    let pass = matches!((d, m), (Some(d), Some(m)) if m <= d);
    Ok(verdict(
        pass,
        format!(
            "lateral FWHM DAS {d:.3?} lines, MV (K = J/2, no depth averaging) {m:.3?} lines; MV with 3-sample depth averaging {md:.3?} lines"
        ),
    ))
}

// 4. Hilbert transform: flat envelope for pure tones, I equals the input.
fn hilbert_envelope() -> deepbf::Result<Verdict> {
    let probe = ProbeConfig {
        num_depth_samples: 1250,
        ..ProbeConfig::default()
    };
    let mut tones = Vec::new();
    let f = probe.carrier_freq_hz / probe.sampling_freq_hz;
    for p in 0..8 {
        let phase = p as f64 * PI / 4.0;
        tones.push(
            (0..1250)
                .map(|t| (2.0 * PI * f * t as f64 + phase).cos())
                .collect::<Vec<f64>>(),
        );
        tones.push(
            (0..1024)
                .map(|t| (2.0 * PI * (37 + 50 * p) as f64 * t as f64 / 1024.0 + phase).cos())
                .collect(),
        );
    }
    let mut flat = 0f64;
    let mut ident = 0f64;
    for z in &tones {
        let n = z.len();
        let iq = hilbert_analytic(&ScanlineImage::new(1, n, z.clone())?)?;
        let env = envelope(&iq);
        let inner = &env.values()[8..n - 8];
        let mean = inner.iter().sum::<f64>() / inner.len() as f64;
        flat = flat.max(inner.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max));
        for (a, b) in iq.i.values().iter().zip(z) {
            ident = ident.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    // I identity on a broadband random line as well.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let z: Vec<f64> = (0..777).map(|_| rng.gen_range(-1e4..1e4)).collect();
    let iq = hilbert_analytic(&ScanlineImage::new(1, 777, z.clone())?)?;
    for (a, b) in iq.i.values().iter().zip(&z) {
        ident = ident.max((a - b).abs() / b.abs().max(1.0));
    }
    Ok(verdict(
        flat <= 0.01 && ident <= 1e-5,
        format!("envelope ripple {flat:.2e} (limit 1e-2), I-channel error {ident:.2e} (limit 1e-5)"),
    ))
}

// 5. Metrics against brute-force oracles.
mod oracle {
    pub fn moments(v: &[f64]) -> (f64, f64) {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (m, v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64)
    }

    pub fn cnr(b: &[f64], a: &[f64]) -> f64 {
        let ((mb, vb), (ma, va)) = (moments(b), moments(a));
        (mb - ma).abs() / (vb + va).sqrt()
    }

    pub fn gcnr(b: &[f64], a: &[f64], bins: usize) -> f64 {
        let lo = b.iter().chain(a).cloned().fold(f64::INFINITY, f64::min);
        let hi = b.iter().chain(a).cloned().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo) / bins as f64;
        let mut overlap = 0.0;
        for k in 0..bins {
            let (e0, e1) = (lo + k as f64 * width, lo + (k + 1) as f64 * width);
            let last = k + 1 == bins;
            let frac = |v: &[f64]| {
                v.iter().filter(|&&x| x >= e0 && (x < e1 || (last && x <= hi))).count() as f64 / v.len() as f64
            };
            overlap += frac(b).min(frac(a));
        }
        1.0 - overlap
    }

    pub fn psnr(x: &[f64], y: &[f64]) -> f64 {
        let mse = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / x.len() as f64;
        if mse == 0.0 {
            return f64::INFINITY;
        }
        20.0 * (255.0 / mse.sqrt()).log10()
    }

    /// Direct per-pixel windows, two-pass statistics.
    pub fn ssim(x: &[f64], y: &[f64], w: usize, h: usize, r: usize) -> f64 {
        let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
        let mut total = 0.0;
        for i in 0..w {
            for j in 0..h {
                let (mut xs, mut ys) = (Vec::new(), Vec::new());
                for a in i.saturating_sub(r)..(i + r + 1).min(w) {
                    for b in j.saturating_sub(r)..(j + r + 1).min(h) {
                        xs.push(x[a * h + b]);
                        ys.push(y[a * h + b]);
                    }
                }
                let ((mx, vx), (my, vy)) = (moments(&xs), moments(&ys));
                let cov = xs.iter().zip(&ys).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / xs.len() as f64;
                total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
        }
        total / (w * h) as f64
    }
}

fn metric_oracles() -> deepbf::Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (w, h) = (64, 64);
    let anechoic = Region::Disk {
        center_l: 40.0,
        center_n: 30.0,
        radius_l: 12.0,
        radius_n: 9.0,
    };
    let background = Region::Rect {
        l0: 2,
        n0: 3,
        l1: 20,
        n1: 60,
    };
    let (mut e_cnr, mut e_gcnr, mut e_psnr, mut e_ssim) = (0f64, 0f64, 0f64, 0f64);
    let mut gcnr_range = true;
    for _ in 0..10 {
        let x: Vec<f64> = (0..w * h).map(|_| rng.gen_range(0..=255) as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| (v + rng.gen_range(-40.0..40.0)).clamp(0.0, 255.0))
            .collect();
        let (gx, gy) = (Grid::new(w, h, x.clone())?, Grid::new(w, h, y.clone())?);
        let pick = |r: &Region, g: &Grid| -> deepbf::Result<Vec<f64>> {
            Ok(r.pixels((w, h))?.iter().map(|&(l, n)| g.get(l, n)).collect())
        };
        let (b, a) = (pick(&background, &gy)?, pick(&anechoic, &gy)?);
        e_cnr = e_cnr.max((cnr(&gy, &background, &anechoic)? - oracle::cnr(&b, &a)).abs());
        let g = gcnr(&gy, &background, &anechoic, 256)?;
        gcnr_range &= (0.0..=1.0).contains(&g);
        e_gcnr = e_gcnr.max((g - oracle::gcnr(&b, &a, 256)).abs());
        e_psnr = e_psnr.max((psnr(&gx, &gy, 255.0)? - oracle::psnr(&x, &y)).abs());
        e_ssim = e_ssim.max((ssim(&gx, &gy, &SsimParams::default())? - oracle::ssim(&x, &y, w, h, 50)).abs());
    }
    let g = Grid::new(w, h, (0..w * h).map(|i| (i % 251) as f64).collect())?;
    let same_psnr = psnr(&g, &g, 255.0)?;
    let same_ssim = ssim(&g, &g, &SsimParams::default())?;
    let pass = e_cnr <= 1e-6
        && e_gcnr <= 1e-6
        && e_psnr <= 1e-6
        && e_ssim <= 1e-4
        && gcnr_range
        && same_psnr == f64::INFINITY
        && same_ssim == 1.0;
    Ok(verdict(
        pass,
        format!(
            "max |diff| CNR {e_cnr:.1e}, GCNR {e_gcnr:.1e}, PSNR {e_psnr:.1e}, SSIM {e_ssim:.1e}; GCNR in [0,1]: {gcnr_range}; identical: PSNR {same_psnr}, SSIM {same_ssim}"
        ),
    ))
}

// 6. Gradient checks at step 1e-3.
fn gradient_checks() -> deepbf::Result<Verdict> {
    let start = Instant::now();
    let conv = conv2d_gradient_check(6, 1e-3)?;
    let bn = batchnorm_gradient_check(6, 1e-3)?;
    let cfg = NetworkConfig {
        num_conv_layers: 3,
        hidden_channels: 8,
        input_channels: 4,
        output_channels: 2,
        input_height: 3,
        input_width: 8,
        skip_concat_at: 2,
        batchnorm_epsilon: 1e-5,
        relu: true,
    };
    let net = gradient_check(&xavier_init::<f32>(&cfg, 6)?, 1e-3)?;
    let (fast, time) = within(Duration::from_secs(60), start);
    Ok(verdict(
        conv < 1e-3 && bn < 1e-3 && net.max_relative_error < 1e-3 && net.checked > 0 && fast,
        format!(
            "conv2d {conv:.1e}, batchnorm {bn:.1e}, 3-layer net {:.1e} ({} checked, {} skipped at ReLU kinks), {time}",
            net.max_relative_error, net.checked, net.skipped
        ),
    ))
}

// 7. 64 x 3 x 96 in, 2 x 3 x 96 out.
fn shape_contract() -> deepbf::Result<Verdict> {
    let mut shapes = Vec::new();
    for cfg in [NetworkConfig::desk(96), NetworkConfig::full(96)] {
        let net = xavier_init::<f32>(&cfg, 7)?;
        let x = Tensor::<f32>::zeros(64, 1, 3, 96);
        shapes.push(net.forward(&x)?.shape());
    }
    Ok(verdict(
        shapes.iter().all(|&s| s == (2, 1, 3, 96)),
        format!(
            "desk and full presets map (64, 3, 96) to {:?}",
            shapes.iter().map(|s| (s.0, s.2, s.3)).collect::<Vec<_>>()
        ),
    ))
}

// 8 and 9 share one desk-scale run.
struct Study {
    summary: Vec<SummaryRow>,
    minutes: f64,
    frames: (usize, usize),
}

fn desk_study_config() -> deepbf::Result<ExperimentConfig> {
    ExperimentConfig::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk_study.toml"))
}

fn run_desk_study() -> deepbf::Result<Study> {
    let start = Instant::now();
    let cfg = desk_study_config()?;
    let delays = compute_delay_table(&cfg.probe)?;
    let mut builder = TrainingSetBuilder::new();
    for f in 0..cfg.training.train_frames {
        builder.add_frame(&cfg, &prepare_frame(f, &simulate_frame(&cfg, f)?, &delays)?)?;
    }
    let set = builder.finish()?;
    eprintln!(
        "  desk study: {} training windows from {} frames in {:.0} s",
        set.samples.len(),
        cfg.training.train_frames,
        start.elapsed().as_secs_f64()
    );
    let net = xavier_init::<f32>(&cfg.network_config(), cfg.training.optimizer.seed)?;
    let outcome = train_with_progress(&set.samples, net, &cfg.training.optimizer, |e, l| {
        eprintln!("  epoch {e:>2}: loss {l:.4} ({:.0} s)", start.elapsed().as_secs_f64())
    })?;
    if let Some(reason) = outcome.diverged {
        return Err(deepbf::Error::Numeric(format!("training diverged: {reason}")));
    }
    let model = Checkpoint {
        network: outcome.network,
        input_scale: set.input_scale,
        output_scale: set.output_scale,
        epoch_losses: outcome.epoch_losses,
    };
    drop(set);
    let eval = cfg.evaluation_frames();
    let mut rows = Vec::new();
    for &f in &eval {
        rows.extend(evaluate_frame(
            &cfg,
            &prepare_frame(f, &simulate_frame(&cfg, f)?, &delays)?,
            Some(&model),
        )?);
    }
    let summary = summarize(&rows);
    for s in &summary {
        eprintln!(
            "  {:>3} {:>6}: CNR {:.3} GCNR {:.3} PSNR {:6.2} SSIM {:.3}",
            s.n_keep, s.method, s.cnr, s.gcnr, s.psnr, s.ssim
        );
    }
    Ok(Study {
        summary,
        minutes: start.elapsed().as_secs_f64() / 60.0,
        frames: (cfg.simulation.num_frames, eval.len()),
    })
}

fn mean_of<'a>(summary: &'a [SummaryRow], n_keep: usize, method: &str) -> Option<&'a SummaryRow> {
    summary.iter().find(|s| s.n_keep == n_keep && s.method == method)
}

fn universality(study: &Study) -> Verdict {
    let mut pass = study.frames.0 >= 80 && study.frames.1 >= 20 && study.minutes <= 45.0;
    let mut notes = vec![format!(
        "{} frames, {} held out, {:.1} min",
        study.frames.0, study.frames.1, study.minutes
    )];
    for k in [32, 16, 8] {
        match (mean_of(&study.summary, k, "deepbf"), mean_of(&study.summary, k, "das")) {
            (Some(d), Some(s)) => {
                pass &= d.cnr > s.cnr && d.psnr >= s.psnr + 0.5;
                notes.push(format!(
                    "n_keep {k}: CNR {:.3} vs {:.3}, PSNR {:.2} vs {:.2} dB",
                    d.cnr, s.cnr, d.psnr, s.psnr
                ));
            }
            _ => {
                pass = false;
                notes.push(format!("n_keep {k}: missing rows"));
            }
        }
    }
    verdict(pass, notes.join("; "))
}

fn graceful_degradation(study: &Study) -> Verdict {
    let mut rows: Vec<&SummaryRow> = study.summary.iter().filter(|s| s.method == "deepbf").collect();
    rows.sort_by_key(|s| std::cmp::Reverse(s.n_keep));
    let mut pass = rows.len() >= 2;
    let mut steps = Vec::new();
    for w in rows.windows(2) {
        let drop = w[0].cnr - w[1].cnr;
        pass &= drop <= 0.15;
        steps.push(format!("{}->{}: {:+.3}", w[0].n_keep, w[1].n_keep, -drop));
    }
    verdict(pass, format!("DeepBF CNR change per step {}", steps.join(", ")))
}

// 10. Reproducible mode gives bit-identical artifacts.
fn determinism() -> deepbf::Result<Verdict> {
    let run = |dir: &Path| -> deepbf::Result<Vec<Vec<u8>>> {
        let cfg = pipeline::miniature_config(dir)?;
        assert!(cfg.reproducible);
        cli::run_configured(&cfg, || {
            cli::cmd_simulate(&cfg)?;
            cli::cmd_train(&cfg, |_, _| {})?;
            cli::cmd_evaluate(&cfg)?;
            cli::cmd_report(&cfg)?;
            Ok(())
        })?;
        ["train_loss.csv", "metrics.csv", "summary.csv", "model.udbf"]
            .iter()
            .map(|f| std::fs::read(dir.join(f)).map_err(|e| deepbf::Error::InvalidArgument(format!("{f}: {e}"))))
            .collect()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (x, y) = (run(a.path())?, run(b.path())?);
    let same: Vec<bool> = x.iter().zip(&y).map(|(p, q)| p == q).collect();
    Ok(verdict(
        same.iter().all(|&s| s),
        format!("train_loss.csv, metrics.csv, summary.csv, model.udbf identical: {same:?}"),
    ))
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |c: u32| wanted.is_empty() || wanted.contains(&c);
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut record = |c: u32, name: &'static str, v: deepbf::Result<Verdict>| {
        let v = v.unwrap_or_else(|e| verdict(false, format!("error: {e}")));
        println!(
            "criterion {c:>2} {} {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        results.push((c, name, v));
    };
    if run(1) {
        record(1, "beamforming identities", beamforming_identities());
    }
    if run(2) {
        record(2, "point-target localization", point_target_localization());
    }
    if run(3) {
        record(3, "resolution ordering", resolution_ordering());
    }
    if run(4) {
        record(4, "Hilbert envelope", hilbert_envelope());
    }
    if run(5) {
        record(5, "metric oracles", metric_oracles());
    }
    if run(6) {
        record(6, "gradient checks", gradient_checks());
    }
    if run(7) {
        record(7, "shape contract", shape_contract());
    }
    if run(8) || run(9) {
        match run_desk_study() {
            Ok(study) => {
                if run(8) {
                    record(8, "desk-scale universality", Ok(universality(&study)));
                }
                if run(9) {
                    record(9, "graceful degradation", Ok(graceful_degradation(&study)));
                }
            }
            Err(e) => {
                let msg = e.to_string();
                if run(8) {
                    record(8, "desk-scale universality", Err(deepbf::Error::Numeric(msg.clone())));
                }
                if run(9) {
                    record(9, "graceful degradation", Err(deepbf::Error::Numeric(msg)));
                }
            }
        }
    }
    if run(10) {
        record(10, "determinism", determinism());
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
