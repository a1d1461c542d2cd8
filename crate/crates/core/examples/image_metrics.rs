//! CNR, generalized CNR, PSNR and SSIM on a synthetic speckle image with a
//! dark disk, against a noisier copy of itself.
//!
//! `cargo run --example image_metrics`

use deepbf::grid::Grid;
use deepbf::metrics::{cnr, gcnr, psnr, ssim, Region, SsimParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub struct Scores {
    pub cnr: f64,
    pub gcnr: f64,
    pub psnr: f64,
    pub ssim: f64,
}

pub fn run_example() -> deepbf::Result<Scores> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let speckle = Normal::new(0.0, 12.0).expect("valid sigma");
    let (nl, nn) = (96, 128);
    let anechoic = Region::Disk {
        center_l: 48.0,
        center_n: 64.0,
        radius_l: 16.0,
        radius_n: 16.0,
    };
    let background = Region::Rect {
        l0: 4,
        n0: 8,
        l1: 24,
        n1: 120,
    };
    let inside = anechoic.pixels((nl, nn))?;
    let reference = Grid::from_fn(nl, nn, |l, n| {
        let base: f64 = if inside.contains(&(l, n)) { 60.0 } else { 170.0 };
        (base + speckle.sample(&mut rng)).clamp(0.0, 255.0)
    });
    let noisy = Grid::from_fn(nl, nn, |l, n| {
        (reference.get(l, n) + speckle.sample(&mut rng)).clamp(0.0, 255.0)
    });

    let s = Scores {
        cnr: cnr(&noisy, &background, &anechoic)?,
        gcnr: gcnr(&noisy, &background, &anechoic, 256)?,
        psnr: psnr(&reference, &noisy, 255.0)?,
        ssim: ssim(&reference, &noisy, &SsimParams::default())?,
    };
    println!(
        "CNR {:.3}  GCNR {:.3}  PSNR {:.2} dB  SSIM {:.3}",
        s.cnr, s.gcnr, s.psnr, s.ssim
    );
    println!(
        "against itself: PSNR {}  SSIM {}",
        psnr(&reference, &reference, 255.0)?,
        ssim(&reference, &reference, &SsimParams::default())?
    );
    Ok(s)
}

#[allow(dead_code)]
fn main() -> deepbf::Result<()> {
    run_example().map(|_| ())
}
