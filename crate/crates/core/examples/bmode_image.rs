//! Cyst phantom to B-mode: simulate, focus, delay-and-sum, Hilbert
//! envelope, 60 dB log compression, binary PGM.
//!
//! `cargo run --example bmode_image [out.pgm]`

use std::path::PathBuf;

use deepbf::acquire::{compute_delay_table, simulate_rf, CystPhantom, Phantom, ProbeConfig};
use deepbf::beamform::{das, time_align, Apodization};
use deepbf::postproc::{bmode_from_iq, hilbert_analytic, BModeImage, DEFAULT_DYNAMIC_RANGE_DB};

pub fn run_example() -> deepbf::Result<BModeImage> {
    let probe = ProbeConfig {
        num_te_events: 48,
        num_depth_samples: 700,
        ..ProbeConfig::default()
    };
    let spec = CystPhantom {
        lateral_min_m: -5e-3,
        lateral_max_m: 5e-3,
        depth_min_m: 4e-3,
        depth_max_m: 13e-3,
        cyst_lateral_m: 0.0,
        cyst_depth_m: 8.5e-3,
        cyst_radius_m: 2.5e-3,
        density_per_mm2: 10.0,
    };
    let phantom = Phantom::cyst(&spec, 11)?;
    let frame = simulate_rf(&probe, &phantom, 0.0, 12)?;
    let cube = time_align(&frame, &compute_delay_table(&probe)?)?;
    let iq = hilbert_analytic(&das(&cube, &Apodization::Uniform)?)?;
    let img = bmode_from_iq(&iq, DEFAULT_DYNAMIC_RANGE_DB)?;

    let (nl, nn) = img.dims();
    let center = img.get(nl / 2, probe.sample_of_depth(spec.cyst_depth_m) as usize);
    println!(
        "{} scatterers, B-mode {nl} x {nn}, cyst center pixel {center}",
        phantom.scatterers.len()
    );
    Ok(img)
}

#[allow(dead_code)]
fn main() -> deepbf::Result<()> {
    let img = run_example()?;
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("bmode_image.pgm"));
    img.write_pgm(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}
