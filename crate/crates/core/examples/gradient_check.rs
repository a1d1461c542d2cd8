//! Finite-difference checks of the hand-written backward passes:
//! convolution, batch normalization and a three-layer network.
//!
//! `cargo run --example gradient_check`

use deepbf::neural::{batchnorm_gradient_check, conv2d_gradient_check, gradient_check, xavier_init, NetworkConfig};

/// Worst relative errors `(conv, batchnorm, network)`.
pub fn run_example() -> deepbf::Result<(f64, f64, f64)> {
    let conv = conv2d_gradient_check(1, 1e-3)?;
    let bn = batchnorm_gradient_check(2, 1e-3)?;
    let config = NetworkConfig {
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
    let net = xavier_init::<f32>(&config, 9)?;
    let report = gradient_check(&net, 1e-3)?;
    println!("conv2d      max relative error {conv:.2e}");
    println!("batchnorm   max relative error {bn:.2e}");
    println!(
        "network     max relative error {:.2e} ({} parameters checked, {} skipped at ReLU kinks)",
        report.max_relative_error, report.checked, report.skipped
    );
    Ok((conv, bn, report.max_relative_error))
}

#[allow(dead_code)]
fn main() -> deepbf::Result<()> {
    run_example().map(|_| ())
}
