//! Receive-channel subsampling: draw variable and fixed masks at the
//! standard rates, zero-fill the dropped channels and compare the
//! delay-and-sum image with the full-aperture one.
//!
//! `cargo run --example channel_subsampling`

use deepbf::acquire::{compute_delay_table, simulate_rf, CystPhantom, Phantom, ProbeConfig};
use deepbf::beamform::{das, time_align, Apodization, TimeAlignedCube};
use deepbf::metrics::psnr;
use deepbf::postproc::{bmode_from_iq, hilbert_analytic};
use deepbf::subsample::{apply_mask, make_mask, Scheme, STANDARD_RATES};

/// `(scheme, n_keep, PSNR against full DAS)` for every mask.
pub fn run_example() -> deepbf::Result<Vec<(Scheme, usize, f64)>> {
    let probe = ProbeConfig {
        num_te_events: 32,
        num_depth_samples: 600,
        ..ProbeConfig::default()
    };
    let spec = CystPhantom {
        lateral_min_m: -4e-3,
        lateral_max_m: 4e-3,
        depth_min_m: 4e-3,
        depth_max_m: 11e-3,
        cyst_lateral_m: 0.0,
        cyst_depth_m: 7.5e-3,
        cyst_radius_m: 2e-3,
        density_per_mm2: 10.0,
    };
    let frame = simulate_rf(&probe, &Phantom::cyst(&spec, 5)?, 0.0, 6)?;
    let cube = time_align(&frame, &compute_delay_table(&probe)?)?;
    let image = |c: &TimeAlignedCube| -> deepbf::Result<_> {
        Ok(bmode_from_iq(&hilbert_analytic(&das(c, &Apodization::Uniform)?)?, 60.0)?.to_grid())
    };
    let reference = image(&cube)?;

    let mut out = Vec::new();
    for scheme in [Scheme::Variable, Scheme::Fixed] {
        for n_keep in STANDARD_RATES {
            let mask = make_mask(scheme, n_keep, probe.num_rx_active, probe.num_depth_samples, 99)?;
            let p = psnr(&reference, &image(&apply_mask(&cube, &mask)?)?, 255.0)?;
            println!("{:>8} {n_keep:>2} channels: PSNR {p:6.2} dB", scheme.as_str());
            out.push((scheme, n_keep, p));
        }
    }
    let mask = make_mask(Scheme::Variable, 8, probe.num_rx_active, 3, 1)?;
    println!("first planes of an 8-channel variable mask:\n{}", mask.to_text());
    Ok(out)
}

#[allow(dead_code)]
fn main() -> deepbf::Result<()> {
    run_example().map(|_| ())
}
