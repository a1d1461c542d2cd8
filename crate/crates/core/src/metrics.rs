//! Image quality measures: CNR, generalized CNR, PSNR and SSIM.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Pixel region of an image indexed `[l][n]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum Region {
    /// Scan lines `l0..=l1`, depth samples `n0..=n1`.
    Rect { l0: usize, n0: usize, l1: usize, n1: usize },
    /// Ellipse in pixel space; a physical disk when scan line and depth
    /// spacings differ.
    Disk {
        center_l: f64,
        center_n: f64,
        radius_l: f64,
        radius_n: f64,
    },
}

impl Region {
    pub fn pixels(&self, dims: (usize, usize)) -> Result<Vec<(usize, usize)>> {
        let (nl, nn) = dims;
        let out: Vec<(usize, usize)> = match *self {
            Region::Rect { l0, n0, l1, n1 } => {
                if l0 > l1 || n0 > n1 || l1 >= nl || n1 >= nn {
                    return Err(Error::InvalidArgument(format!(
                        "rectangle {l0}..={l1} x {n0}..={n1} outside {nl} x {nn} image"
                    )));
                }
                (l0..=l1).flat_map(|l| (n0..=n1).map(move |n| (l, n))).collect()
            }
            Region::Disk {
                center_l,
                center_n,
                radius_l,
                radius_n,
            } => {
                if !(radius_l > 0.0 && radius_n > 0.0)
                    || center_l - radius_l < -0.5
                    || center_n - radius_n < -0.5
                    || center_l + radius_l > nl as f64 - 0.5
                    || center_n + radius_n > nn as f64 - 0.5
                {
                    return Err(Error::InvalidArgument(format!(
                        "disk at ({center_l}, {center_n}) radii ({radius_l}, {radius_n}) outside {nl} x {nn} image"
                    )));
                }
                let l_lo = (center_l - radius_l).ceil().max(0.0) as usize;
                let l_hi = (center_l + radius_l).floor() as usize;
                let n_lo = (center_n - radius_n).ceil().max(0.0) as usize;
                let n_hi = (center_n + radius_n).floor() as usize;
                let mut px = Vec::new();
                for l in l_lo..=l_hi.min(nl - 1) {
                    for n in n_lo..=n_hi.min(nn - 1) {
                        let u = (l as f64 - center_l) / radius_l;
                        let v = (n as f64 - center_n) / radius_n;
                        if u * u + v * v <= 1.0 {
                            px.push((l, n));
                        }
                    }
                }
                px
            }
        };
        if out.is_empty() {
            return Err(Error::InvalidArgument("region contains no pixels".into()));
        }
        Ok(out)
    }

    pub fn values(&self, img: &Grid) -> Result<Vec<f64>> {
        Ok(self
            .pixels(img.dims())?
            .into_iter()
            .map(|(l, n)| img.get(l, n))
            .collect())
    }
}

fn mean_and_population_variance(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// `|mu_B - mu_aS| / sqrt(var_B + var_aS)` with population variances.
pub fn cnr(img: &Grid, background: &Region, anechoic: &Region) -> Result<f64> {
    cnr_of_values(&background.values(img)?, &anechoic.values(img)?)
}

pub fn cnr_of_values(background: &[f64], anechoic: &[f64]) -> Result<f64> {
    if background.is_empty() || anechoic.is_empty() {
        return Err(Error::InvalidArgument("CNR regions must be non-empty".into()));
    }
    let (mb, vb) = mean_and_population_variance(background);
    let (ma, va) = mean_and_population_variance(anechoic);
    let spread = vb + va;
    if spread == 0.0 {
        if mb == ma {
            return Ok(0.0);
        }
        return Err(Error::Numeric(
            "CNR undefined: both regions are constant with different levels".into(),
        ));
    }
    Ok((mb - ma).abs() / spread.sqrt())
}

/// `1 - sum_bin min(p_B, p_aS)` over `bins` equal bins spanning the joint
/// range of both regions.
pub fn gcnr(img: &Grid, background: &Region, anechoic: &Region, bins: usize) -> Result<f64> {
    gcnr_of_values(&background.values(img)?, &anechoic.values(img)?, bins)
}

pub fn gcnr_of_values(background: &[f64], anechoic: &[f64], bins: usize) -> Result<f64> {
    if background.is_empty() || anechoic.is_empty() || bins == 0 {
        return Err(Error::InvalidArgument("GCNR needs non-empty regions and bins".into()));
    }
    let lo = background.iter().chain(anechoic).cloned().fold(f64::INFINITY, f64::min);
    let hi = background
        .iter()
        .chain(anechoic)
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Ok(0.0);
    }
    let histogram = |v: &[f64]| {
        let mut h = vec![0f64; bins];
        for &x in v {
            let b = (((x - lo) / (hi - lo)) * bins as f64) as usize;
            h[b.min(bins - 1)] += 1.0;
        }
        let total = v.len() as f64;
        h.iter_mut().for_each(|c| *c /= total);
        h
    };
    let (hb, ha) = (histogram(background), histogram(anechoic));
    let overlap: f64 = hb.iter().zip(&ha).map(|(a, b)| a.min(*b)).sum();
    Ok((1.0 - overlap).clamp(0.0, 1.0))
}

/// Peak signal-to-noise ratio in dB; `+inf` for identical images.
pub fn psnr(reference: &Grid, test: &Grid, r_max: f64) -> Result<f64> {
    if reference.dims() != test.dims() {
        return Err(Error::DimensionMismatch("PSNR images differ in size".into()));
    }
    let sq: f64 = reference
        .values()
        .iter()
        .zip(test.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if sq == 0.0 {
        return Ok(f64::INFINITY);
    }
    let count = reference.values().len() as f64;
    Ok(10.0 * (count * r_max * r_max / sq).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    /// Half-width of the square averaging window.
    pub window_radius: usize,
    pub r_max: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            k1: 0.01,
            k2: 0.03,
            window_radius: 50,
            r_max: 255.0,
        }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.r_max).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.r_max).powi(2)
    }

    fn validate(&self) -> Result<()> {
        if self.window_radius == 0 || !(self.k1 > 0.0 && self.k2 > 0.0 && self.r_max > 0.0) {
            return Err(Error::InvalidArgument("SSIM parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Summed-area table with a zero border row and column.
struct Integral {
    stride: usize,
    sums: Vec<f64>,
}

impl Integral {
    fn new(nl: usize, nn: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let stride = nn + 1;
        let mut sums = vec![0f64; (nl + 1) * stride];
        for l in 0..nl {
            let mut row = 0.0;
            for n in 0..nn {
                row += f(l, n);
                sums[(l + 1) * stride + n + 1] = sums[l * stride + n + 1] + row;
            }
        }
        Self { stride, sums }
    }

    /// Sum over `l0..l1`, `n0..n1` (half open).
    fn rect(&self, l0: usize, l1: usize, n0: usize, n1: usize) -> f64 {
        let s = self.stride;
        self.sums[l1 * s + n1] - self.sums[l0 * s + n1] - self.sums[l1 * s + n0] + self.sums[l0 * s + n0]
    }
}

/// Mean structural similarity over local square windows clipped at the
/// image border.
pub fn ssim(reference: &Grid, test: &Grid, params: &SsimParams) -> Result<f64> {
    Ok(ssim_map(reference, test, params)?.values().iter().sum::<f64>() / reference.values().len() as f64)
}

/// Per-pixel SSIM.
pub fn ssim_map(reference: &Grid, test: &Grid, params: &SsimParams) -> Result<Grid> {
    if reference.dims() != test.dims() {
        return Err(Error::DimensionMismatch("SSIM images differ in size".into()));
    }
    params.validate()?;
    let (nl, nn) = reference.dims();
    let sx = Integral::new(nl, nn, |l, n| reference.get(l, n));
    let sy = Integral::new(nl, nn, |l, n| test.get(l, n));
    let sxx = Integral::new(nl, nn, |l, n| reference.get(l, n).powi(2));
    let syy = Integral::new(nl, nn, |l, n| test.get(l, n).powi(2));
    let sxy = Integral::new(nl, nn, |l, n| reference.get(l, n) * test.get(l, n));
    let (c1, c2) = (params.c1(), params.c2());
    let r = params.window_radius;
    Ok(Grid::from_fn(nl, nn, |l, n| {
        let (l0, l1) = (l.saturating_sub(r), (l + r + 1).min(nl));
        let (n0, n1) = (n.saturating_sub(r), (n + r + 1).min(nn));
        let count = ((l1 - l0) * (n1 - n0)) as f64;
        let mx = sx.rect(l0, l1, n0, n1) / count;
        let my = sy.rect(l0, l1, n0, n1) / count;
        let vx = sxx.rect(l0, l1, n0, n1) / count - mx * mx;
        let vy = syy.rect(l0, l1, n0, n1) / count - my * my;
        let cxy = sxy.rect(l0, l1, n0, n1) / count - mx * my;
        ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
    }))
}

/// One line of a metrics report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub frame: usize,
    pub scheme: String,
    pub n_keep: usize,
    pub method: String,
    pub cnr: f64,
    pub gcnr: f64,
    pub psnr: f64,
    pub ssim: f64,
}

pub const METRICS_CSV_HEADER: &str = "frame,scheme,n_keep,method,CNR,GCNR,PSNR,SSIM";

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.frame, r.scheme, r.n_keep, r.method, r.cnr, r.gcnr, r.psnr, r.ssim
        );
    }
    out
}

/// Parses [`metrics_csv`] output.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_CSV_HEADER) {
        return Err(Error::Format("unexpected metrics CSV header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(Error::Format(format!("metrics row has {} fields", f.len())));
            }
            let int = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Format(format!("bad integer {s}")))
            };
            let real = |s: &str| s.parse::<f64>().map_err(|_| Error::Format(format!("bad number {s}")));
            Ok(MetricsRow {
                frame: int(f[0])?,
                scheme: f[1].to_string(),
                n_keep: int(f[2])?,
                method: f[3].to_string(),
                cnr: real(f[4])?,
                gcnr: real(f[5])?,
                psnr: real(f[6])?,
                ssim: real(f[7])?,
            })
        })
        .collect()
}

/// Full width at half maximum of the peak of `profile`, in samples.
///
/// The half-maximum crossings on either side of the global maximum are
/// located by linear interpolation. `None` when the profile is empty, not
/// positive at its peak, or the peak does not fall to half on both sides.
pub fn fwhm(profile: &[f64]) -> Option<f64> {
    let (peak, &max) = profile.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(max > 0.0) {
        return None;
    }
    let half = max / 2.0;
    let left = (0..peak).rev().find(|&i| profile[i] <= half)?;
    let right = (peak + 1..profile.len()).find(|&i| profile[i] <= half)?;
    let cross = |a: usize, b: usize| a as f64 + (half - profile[a]) / (profile[b] - profile[a]) * (b as f64 - a as f64);
    Some(cross(right - 1, right) - cross(left, left + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cnr_hand_example() {
        let c = cnr_of_values(&[90.0, 100.0, 110.0, 100.0], &[30.0, 40.0, 50.0, 40.0]).unwrap();
        assert!((c - 6.0).abs() < 1e-12);
    }

    #[test]
    fn cnr_degenerate_cases() {
        assert_eq!(cnr_of_values(&[3.0, 3.0], &[3.0]).unwrap(), 0.0);
        assert!(matches!(cnr_of_values(&[3.0, 3.0], &[4.0]), Err(Error::Numeric(_))));
        let v = [1.0, 5.0, 2.0];
        assert_eq!(cnr_of_values(&v, &v).unwrap(), 0.0);
    }

    #[test]
    fn cnr_is_scale_invariant() {
        let b = [9.0, 3.0, 4.0, 7.5];
        let a = [1.0, 0.5, 2.0];
        let scaled = |v: &[f64]| v.iter().map(|x| x * 3.7).collect::<Vec<_>>();
        let c0 = cnr_of_values(&b, &a).unwrap();
        let c1 = cnr_of_values(&scaled(&b), &scaled(&a)).unwrap();
        assert!((c0 - c1).abs() < 1e-12);
    }

    #[test]
    fn gcnr_examples() {
        assert_eq!(gcnr_of_values(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0], 256).unwrap(), 0.0);
        assert_eq!(
            gcnr_of_values(&[0.0, 50.0, 100.0], &[150.0, 200.0, 255.0], 256).unwrap(),
            1.0
        );
        let g = gcnr_of_values(&[0.0, 0.0, 1.0, 1.0], &[0.0, 0.0, 2.0, 2.0], 256).unwrap();
        assert!((g - 0.5).abs() < 1e-15);
    }

    #[test]
    fn psnr_reference_values() {
        let a = Grid::from_fn(4, 5, |l, n| (l * 5 + n) as f64);
        assert_eq!(psnr(&a, &a, 255.0).unwrap(), f64::INFINITY);
        let z = Grid::from_fn(4, 5, |_, _| 0.0);
        let full = z.map(|_| 255.0);
        assert!((psnr(&z, &full, 255.0).unwrap()).abs() < 1e-12);
        let tenth = z.map(|_| 25.5);
        assert!((psnr(&z, &tenth, 255.0).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_of_identical_images_is_one() {
        let a = Grid::from_fn(20, 30, |l, n| ((l * 31 + n * 17) % 256) as f64);
        assert_eq!(ssim(&a, &a, &SsimParams::default()).unwrap(), 1.0);
    }

    #[test]
    fn regions_enumerate_pixels() {
        let rect = Region::Rect {
            l0: 1,
            n0: 2,
            l1: 2,
            n1: 4,
        };
        assert_eq!(rect.pixels((5, 5)).unwrap().len(), 6);
        assert!(Region::Rect {
            l0: 1,
            n0: 2,
            l1: 5,
            n1: 4
        }
        .pixels((5, 5))
        .is_err());
        let disk = Region::Disk {
            center_l: 5.0,
            center_n: 5.0,
            radius_l: 2.0,
            radius_n: 2.0,
        };
        assert_eq!(disk.pixels((11, 11)).unwrap().len(), 13);
        assert!(disk.pixels((6, 11)).is_err());
    }

    #[test]
    fn csv_round_trip_keeps_infinity() {
        let rows = vec![MetricsRow {
            frame: 3,
            scheme: "variable".into(),
            n_keep: 64,
            method: "das".into(),
            cnr: 1.25,
            gcnr: 0.5,
            psnr: f64::INFINITY,
            ssim: 1.0,
        }];
        let text = metrics_csv(&rows);
        assert!(text.starts_with("frame,scheme,n_keep,method,CNR,GCNR,PSNR,SSIM\n"));
        assert!(text.contains(",inf,"));
        assert_eq!(parse_metrics_csv(&text).unwrap(), rows);
    }

    #[test]
    fn fwhm_of_triangle_and_gaussian() {
        // Triangle of half-width 4: half maximum is reached 2 samples from the peak.
        let tri: Vec<f64> = (0..11).map(|i| 4.0 - (i as f64 - 5.0).abs().min(4.0)).collect();
        assert!((fwhm(&tri).unwrap() - 4.0).abs() < 1e-12);
        let sigma = 3.0f64;
        let g: Vec<f64> = (0..61)
            .map(|i| (-((i as f64 - 30.0) / sigma).powi(2) / 2.0).exp())
            .collect();
        let exact = 2.0 * (2.0 * 2f64.ln()).sqrt() * sigma;
        assert!((fwhm(&g).unwrap() - exact).abs() < 0.05);
        assert_eq!(fwhm(&[1.0, 1.0]), None);
        assert_eq!(fwhm(&[]), None);
    }
}
