//! Analytic signal, envelope detection, log compression and PGM output.

use std::io::Write;
use std::path::Path;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::beamform::ScanlineImage;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Display dynamic range used unless configured otherwise.
pub const DEFAULT_DYNAMIC_RANGE_DB: f64 = 60.0;

/// In-phase and quadrature components `[l][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IQImage {
    pub i: Grid,
    pub q: Grid,
}

impl IQImage {
    pub fn new(i: Grid, q: Grid) -> Result<Self> {
        if i.dims() != q.dims() {
            return Err(Error::DimensionMismatch("I and Q dimensions differ".into()));
        }
        if i.values().iter().chain(q.values()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("IQ image is not finite".into()));
        }
        Ok(Self { i, q })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.i.dims()
    }
}

/// 8-bit log-compressed image `[l][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BModeImage {
    num_lines: usize,
    num_depth: usize,
    pixels: Vec<u8>,
    dynamic_range_db: f64,
}

impl BModeImage {
    pub fn dims(&self) -> (usize, usize) {
        (self.num_lines, self.num_depth)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, l: usize, n: usize) -> u8 {
        self.pixels[l * self.num_depth + n]
    }

    pub fn dynamic_range_db(&self) -> f64 {
        self.dynamic_range_db
    }

    pub fn to_grid(&self) -> Grid {
        Grid::from_fn(self.num_lines, self.num_depth, |l, n| self.get(l, n) as f64)
    }

    /// Binary PGM (P5), one image row per depth sample.
    pub fn encode_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.num_lines, self.num_depth).into_bytes();
        out.reserve(self.pixels.len());
        for n in 0..self.num_depth {
            for l in 0..self.num_lines {
                out.push(self.get(l, n));
            }
        }
        out
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.encode_pgm()).map_err(|e| Error::io(path, e))
    }

    /// Reads back a P5 image written by [`BModeImage::encode_pgm`].
    pub fn decode_pgm(bytes: &[u8], dynamic_range_db: f64) -> Result<Self> {
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Format("PGM header is incomplete".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P5" {
            return Err(Error::Format(format!("not a binary PGM: {}", fields[0])));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad PGM header field {s}")))
        };
        let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if maxval != 255 {
            return Err(Error::Format(format!("unsupported PGM maxval {maxval}")));
        }
        let raster = &bytes[pos + 1..];
        if raster.len() != width * height {
            return Err(Error::Truncated {
                expected: (width * height) as u64,
                found: raster.len() as u64,
            });
        }
        let mut pixels = vec![0u8; width * height];
        for n in 0..height {
            for l in 0..width {
                pixels[l * height + n] = raster[n * width + l];
            }
        }
        Ok(Self {
            num_lines: width,
            num_depth: height,
            pixels,
            dynamic_range_db,
        })
    }
}

/// Analytic signal of every scan line along depth.
///
/// Uses the spectral construction: negative frequencies are cleared,
/// strictly positive ones doubled, DC and (for even `N`) Nyquist kept.
pub fn hilbert_analytic(z: &ScanlineImage) -> Result<IQImage> {
    let (nl, nn) = z.dims();
    if nn < 2 {
        return Err(Error::InvalidArgument(format!(
            "Hilbert transform needs at least 2 depth samples, got {nn}"
        )));
    }
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(nn);
    let inverse = planner.plan_fft_inverse(nn);
    let mut scratch =
        vec![Complex64::default(); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];

    let mut i_out = Vec::with_capacity(nl * nn);
    let mut q_out = Vec::with_capacity(nl * nn);
    let mut buf = vec![Complex64::default(); nn];
    let positive_end = nn.div_ceil(2); // exclusive; bins 1..positive_end are doubled
    for l in 0..nl {
        for (b, &v) in buf.iter_mut().zip(z.line(l)) {
            *b = Complex64::new(v, 0.0);
        }
        forward.process_with_scratch(&mut buf, &mut scratch);
        for b in &mut buf[1..positive_end] {
            *b *= 2.0;
        }
        let negative_start = nn / 2 + 1;
        for b in &mut buf[negative_start..] {
            *b = Complex64::default();
        }
        inverse.process_with_scratch(&mut buf, &mut scratch);
        let scale = 1.0 / nn as f64;
        // The real part reproduces the input up to rounding; keep it exact.
        i_out.extend_from_slice(z.line(l));
        q_out.extend(buf.iter().map(|c| c.im * scale));
    }
    IQImage::new(Grid::new(nl, nn, i_out)?, Grid::new(nl, nn, q_out)?)
}

/// `sqrt(I^2 + Q^2)`.
pub fn envelope(iq: &IQImage) -> Grid {
    let (nl, nn) = iq.dims();
    let values =
        iq.i.values()
            .iter()
            .zip(iq.q.values())
            .map(|(i, q)| i.hypot(*q))
            .collect();
    Grid::new(nl, nn, values).expect("I and Q share dimensions")
}

/// Maps an envelope to 8-bit pixels over `dynamic_range_db` below its
/// maximum.
pub fn log_compress(env: &Grid, dynamic_range_db: f64) -> Result<BModeImage> {
    if !(dynamic_range_db > 0.0 && dynamic_range_db.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "dynamic range must be positive, got {dynamic_range_db}"
        )));
    }
    if env.values().iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "envelope must be finite and non-negative".into(),
        ));
    }
    let max = env.values().iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::Numeric(
            "envelope is identically zero; no reference level".into(),
        ));
    }
    let floor = 10f64.powf(-dynamic_range_db / 20.0) * 1e-2 * max;
    let pixels = env
        .values()
        .iter()
        .map(|&v| {
            let db = 20.0 * (v.max(floor) / max).log10();
            (255.0 * (1.0 + db / dynamic_range_db).clamp(0.0, 1.0)).round() as u8
        })
        .collect();
    let (num_lines, num_depth) = env.dims();
    Ok(BModeImage {
        num_lines,
        num_depth,
        pixels,
        dynamic_range_db,
    })
}

/// Hilbert, envelope and log compression in one step.
pub fn bmode_from_rf(z: &ScanlineImage, dynamic_range_db: f64) -> Result<BModeImage> {
    log_compress(&envelope(&hilbert_analytic(z)?), dynamic_range_db)
}

/// Envelope and log compression of an IQ image.
pub fn bmode_from_iq(iq: &IQImage, dynamic_range_db: f64) -> Result<BModeImage> {
    log_compress(&envelope(iq), dynamic_range_db)
}
