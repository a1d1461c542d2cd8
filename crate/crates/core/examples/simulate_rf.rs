//! Simulate one RF frame of a single point scatterer, round-trip it through
//! the USRF container and locate the echo on the center scan line.
//!
//! `cargo run --example simulate_rf`

use deepbf::acquire::{decode_rf, encode_rf, simulate_rf, Phantom, ProbeConfig, Scatterer};

/// Returns `(depth sample of the strongest echo, expected sample)`.
pub fn run_example() -> deepbf::Result<(usize, f64)> {
    let probe = ProbeConfig {
        num_te_events: 16,
        num_depth_samples: 800,
        ..ProbeConfig::default()
    };
    let depth = 10e-3;
    let phantom = Phantom::new(vec![Scatterer {
        lateral_m: probe.scanline_lateral(8),
        depth_m: depth,
        amplitude: 1.0,
    }])?;
    let frame = simulate_rf(&probe, &phantom, 0.0, 42)?;
    let bytes = encode_rf(&frame);
    let back = decode_rf(&bytes)?;
    assert_eq!(back, frame);

    let (l, j, n) = frame.dims();
    println!(
        "frame: {l} lines x {j} channels x {n} samples, {} bytes as USRF",
        bytes.len()
    );
    let center = frame.channel(8, probe.num_rx_active / 2);
    let peak = center
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let expected = probe.sample_of_depth(depth);
    println!("echo peak at sample {peak}, two-way time of flight predicts {expected:.1}");
    Ok((peak, expected))
}

#[allow(dead_code)]
fn main() -> deepbf::Result<()> {
    run_example().map(|_| ())
}
