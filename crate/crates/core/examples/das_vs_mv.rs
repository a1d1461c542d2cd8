//! Two point scatterers three scan lines apart, beamformed with
//! delay-and-sum and with minimum variance. Prints the lateral envelope
//! width of each.
//!
//! MV uses spatial smoothing only, without depth averaging.
//!
//! `cargo run --example das_vs_mv`

use deepbf::acquire::{compute_delay_table, simulate_rf, Phantom, ProbeConfig, Scatterer};
use deepbf::beamform::{das, mv_beamform, time_align, Apodization, MvParams};
use deepbf::metrics::fwhm;
use deepbf::postproc::{envelope, hilbert_analytic};

pub struct Resolution {
    pub das_fwhm: f64,
    pub mv_fwhm: f64,
}

pub fn run_example() -> deepbf::Result<Resolution> {
    let probe = ProbeConfig {
        num_te_events: 24,
        num_depth_samples: 1700,
        ..ProbeConfig::default()
    };
    let depth = 30e-3;
    let phantom = Phantom::new(
        [10, 13]
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
    let params = MvParams {
        temporal_halfwidth: 0,
        ..MvParams::for_aperture(probe.num_rx_active)
    };
    let mv = mv_beamform(&cube, &params)?;
    let mv_env = envelope(&hilbert_analytic(&mv.image)?);

    let n = probe.sample_of_depth(depth).round() as usize;
    let width = |env: &deepbf::grid::Grid| {
        let (nl, _) = env.dims();
        // Row holding the brightest pixel near the scatterer depth.
        let row = (n - 30..n + 30)
            .max_by(|&a, &b| {
                let s = |r: usize| (0..nl).map(|l| env.get(l, r)).fold(0.0, f64::max);
                s(a).total_cmp(&s(b))
            })
            .unwrap_or(n);
        let profile: Vec<f64> = (0..nl).map(|l| env.get(l, row)).collect();
        fwhm(&profile).unwrap_or(f64::INFINITY)
    };
    let r = Resolution {
        das_fwhm: width(&das_env),
        mv_fwhm: width(&mv_env),
    };
    println!("lateral FWHM: DAS {:.2} lines, MV {:.2} lines", r.das_fwhm, r.mv_fwhm);
    println!("MV fallbacks to uniform weights: {:?}", mv.diagnostics);
    Ok(r)
}

#[allow(dead_code)]
fn main() -> deepbf::Result<()> {
    run_example().map(|_| ())
}
