//! Receive time alignment, delay-and-sum and minimum-variance beamforming.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquire::{DelayTable, RFFrame};
use crate::error::{Error, Result};

/// Focused channel data `y[l][j][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeAlignedCube {
    dims: (usize, usize, usize),
    data: Vec<f32>,
}

impl TimeAlignedCube {
    pub fn new(num_lines: usize, num_rx: usize, num_depth: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != num_lines * num_rx * num_depth {
            return Err(Error::DimensionMismatch(format!(
                "cube holds {} samples, expected {num_lines} x {num_rx} x {num_depth}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("cube contains non-finite samples".into()));
        }
        Ok(Self {
            dims: (num_lines, num_rx, num_depth),
            data,
        })
    }

    pub fn from_fn(
        num_lines: usize,
        num_rx: usize,
        num_depth: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(num_lines * num_rx * num_depth);
        for l in 0..num_lines {
            for j in 0..num_rx {
                for n in 0..num_depth {
                    data.push(f(l, j, n));
                }
            }
        }
        Self::new(num_lines, num_rx, num_depth, data)
    }

    /// `(L, J, N)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, l: usize, j: usize, n: usize) -> f32 {
        let (_, nj, nn) = self.dims;
        self.data[(l * nj + j) * nn + n]
    }

    pub fn channel(&self, l: usize, j: usize) -> &[f32] {
        let (_, nj, nn) = self.dims;
        let start = (l * nj + j) * nn;
        &self.data[start..start + nn]
    }

    /// All channels of scan line `l`, `[j][n]`.
    pub fn line(&self, l: usize) -> &[f32] {
        let (_, nj, nn) = self.dims;
        &self.data[l * nj * nn..(l + 1) * nj * nn]
    }

    /// Linear combination `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f32, other: &Self, beta: f32) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch("cube dimensions differ".into()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Self::new(self.dims.0, self.dims.1, self.dims.2, data)
    }
}

/// Beamformed RF `z[l][n]`, before envelope detection.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanlineImage {
    num_lines: usize,
    num_depth: usize,
    z: Vec<f64>,
}

impl ScanlineImage {
    pub fn new(num_lines: usize, num_depth: usize, z: Vec<f64>) -> Result<Self> {
        if z.len() != num_lines * num_depth {
            return Err(Error::DimensionMismatch(format!(
                "scan line image holds {} samples, expected {num_lines} x {num_depth}",
                z.len()
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("beamformed image is not finite".into()));
        }
        Ok(Self {
            num_lines,
            num_depth,
            z,
        })
    }

    /// `(L, N)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.num_lines, self.num_depth)
    }

    pub fn get(&self, l: usize, n: usize) -> f64 {
        self.z[l * self.num_depth + n]
    }

    pub fn line(&self, l: usize) -> &[f64] {
        &self.z[l * self.num_depth..(l + 1) * self.num_depth]
    }

    pub fn data(&self) -> &[f64] {
        &self.z
    }
}

/// Receive apodization for [`das`].
#[derive(Debug, Clone, PartialEq)]
pub enum Apodization {
    /// `w_j = 1 / J`.
    Uniform,
    /// One weight per channel, shared by all lines and depths.
    Static(Vec<f64>),
    /// Weights `w[l][n][j]`.
    Adaptive(Vec<f64>),
}

/// Applies the receive focusing delays: `y[l][j][n] = x[l][j][n + tau[j][n]]`.
///
/// Samples whose source index falls past the end of the record read as zero.
pub fn time_align(frame: &RFFrame, delays: &DelayTable) -> Result<TimeAlignedCube> {
    let (nl, nj, nn) = frame.dims();
    if delays.num_rx() != nj || delays.num_depth() != nn {
        return Err(Error::DimensionMismatch(format!(
            "delay table is {} x {}, frame has {nj} channels of {nn} samples",
            delays.num_rx(),
            delays.num_depth()
        )));
    }
    let mut data = vec![0f32; nl * nj * nn];
    for (l, line) in data.chunks_mut(nj * nn).enumerate() {
        for (j, out) in line.chunks_mut(nn).enumerate() {
            let x = frame.channel(l, j);
            for (n, (o, &tau)) in out.iter_mut().zip(delays.channel(j)).enumerate() {
                if let Some(&v) = x.get(n + tau as usize) {
                    *o = v;
                }
            }
        }
    }
    TimeAlignedCube::new(nl, nj, nn, data)
}

/// Delay-and-sum: `z[l][n] = sum_j w_j y[l][j][n]`.
pub fn das(cube: &TimeAlignedCube, weights: &Apodization) -> Result<ScanlineImage> {
    let (nl, nj, nn) = cube.dims();
    let check = |w: &[f64], expected: usize| -> Result<()> {
        if w.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "apodization holds {} weights, expected {expected}",
                w.len()
            )));
        }
        if w.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("apodization contains NaN".into()));
        }
        Ok(())
    };
    let mut z = vec![0f64; nl * nn];
    match weights {
        Apodization::Uniform => {
            for (l, out) in z.chunks_mut(nn).enumerate() {
                for j in 0..nj {
                    for (o, &y) in out.iter_mut().zip(cube.channel(l, j)) {
                        *o += y as f64;
                    }
                }
                out.iter_mut().for_each(|v| *v /= nj as f64);
            }
        }
        Apodization::Static(w) => {
            check(w, nj)?;
            for (l, out) in z.chunks_mut(nn).enumerate() {
                for (j, &wj) in w.iter().enumerate() {
                    for (o, &y) in out.iter_mut().zip(cube.channel(l, j)) {
                        *o += wj * y as f64;
                    }
                }
            }
        }
        Apodization::Adaptive(w) => {
            check(w, nl * nn * nj)?;
            for (l, out) in z.chunks_mut(nn).enumerate() {
                for (n, o) in out.iter_mut().enumerate() {
                    let wn = &w[(l * nn + n) * nj..(l * nn + n + 1) * nj];
                    *o = wn
                        .iter()
                        .enumerate()
                        .map(|(j, &wj)| wj * cube.get(l, j, n) as f64)
                        .sum();
                }
            }
        }
    }
    ScanlineImage::new(nl, nn, z)
}

/// Minimum-variance beamformer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MvParams {
    /// Subaperture length `K`; the steering vector is `K` ones.
    pub subaperture_len: usize,
    /// Half-width of the depth window over which covariances are averaged.
    pub temporal_halfwidth: usize,
    /// Diagonal loading relative to `trace(R) / K`.
    pub loading_factor: f64,
}

impl MvParams {
    /// `K = J / 2`, three-sample depth averaging, 1 % diagonal loading.
    pub fn for_aperture(num_rx: usize) -> Self {
        Self {
            subaperture_len: (num_rx / 2).max(1),
            temporal_halfwidth: 1,
            loading_factor: 1e-2,
        }
    }

    pub fn validate(&self, num_rx: usize) -> Result<()> {
        if self.subaperture_len == 0 || 2 * self.subaperture_len > num_rx.max(2) {
            return Err(Error::InvalidArgument(format!(
                "subaperture length {} outside 1..={}",
                self.subaperture_len,
                num_rx / 2
            )));
        }
        if !(self.loading_factor >= 0.0 && self.loading_factor.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "loading factor must be non-negative, got {}",
                self.loading_factor
            )));
        }
        Ok(())
    }
}

/// Square matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    pub dim: usize,
    pub values: Vec<f64>,
}

impl Covariance {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.dim + c]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }
}

/// Accumulates `sum_s ybar_s ybar_s^T` over every length-`k` subaperture of
/// `snapshot` into the upper triangle of `acc`.
///
/// Entry `(a, a + d)` is a sliding sum of lag-`d` products, so a prefix sum
/// per lag gives all of them in `O(J K)`.
fn accumulate_subaperture_products(snapshot: &[f64], k: usize, acc: &mut [f64], prefix: &mut Vec<f64>) {
    let nj = snapshot.len();
    let subapertures = nj - k + 1;
    for d in 0..k {
        prefix.clear();
        prefix.push(0.0);
        let mut run = 0.0;
        for t in 0..nj - d {
            run += snapshot[t] * snapshot[t + d];
            prefix.push(run);
        }
        for a in 0..k - d {
            acc[a * k + a + d] += prefix[a + subapertures] - prefix[a];
        }
    }
}

fn covariance_at(
    line: &[f32],
    num_rx: usize,
    num_depth: usize,
    n: usize,
    params: &MvParams,
    snapshot: &mut Vec<f64>,
    prefix: &mut Vec<f64>,
) -> Covariance {
    let k = params.subaperture_len;
    let lo = n.saturating_sub(params.temporal_halfwidth);
    let hi = (n + params.temporal_halfwidth).min(num_depth - 1);
    let mut acc = vec![0f64; k * k];
    for m in lo..=hi {
        snapshot.clear();
        snapshot.extend((0..num_rx).map(|j| line[j * num_depth + m] as f64));
        accumulate_subaperture_products(snapshot, k, &mut acc, prefix);
    }
    let norm = ((hi - lo + 1) * (num_rx - k + 1)) as f64;
    for a in 0..k {
        for b in a..k {
            let v = acc[a * k + b] / norm;
            acc[a * k + b] = v;
            acc[b * k + a] = v;
        }
    }
    let mut cov = Covariance { dim: k, values: acc };
    let load = params.loading_factor * cov.trace() / k as f64;
    for i in 0..k {
        cov.values[i * k + i] += load;
    }
    cov
}

/// Spatially smoothed, depth-averaged and diagonally loaded covariance
/// estimate at `(l, n)`.
pub fn mv_covariance(cube: &TimeAlignedCube, l: usize, n: usize, params: &MvParams) -> Result<Covariance> {
    let (nl, nj, nn) = cube.dims();
    params.validate(nj)?;
    if l >= nl || n >= nn {
        return Err(Error::InvalidArgument(format!("sample ({l}, {n}) outside {nl} x {nn}")));
    }
    Ok(covariance_at(
        cube.line(l),
        nj,
        nn,
        n,
        params,
        &mut Vec::new(),
        &mut Vec::new(),
    ))
}

/// In-place Cholesky factorisation of a symmetric positive-definite matrix;
/// the lower triangle holds `L` afterwards. Returns `false` on a
/// non-positive pivot.
fn cholesky_in_place(m: &mut [f64], dim: usize) -> bool {
    for j in 0..dim {
        let mut diag = m[j * dim + j];
        for p in 0..j {
            diag -= m[j * dim + p] * m[j * dim + p];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return false;
        }
        let diag = diag.sqrt();
        m[j * dim + j] = diag;
        for i in j + 1..dim {
            let mut v = m[i * dim + j];
            for p in 0..j {
                v -= m[i * dim + p] * m[j * dim + p];
            }
            m[i * dim + j] = v / diag;
        }
    }
    true
}

/// Capon weights `R^{-1} a / (a^T R^{-1} a)` for the all-ones steering
/// vector. `None` if `R` is not numerically positive definite.
pub fn mv_weights(cov: &Covariance) -> Option<Vec<f64>> {
    let dim = cov.dim;
    let mut factor = cov.values.clone();
    if !cholesky_in_place(&mut factor, dim) {
        return None;
    }
    // Forward then backward substitution for R u = 1.
    let mut u = vec![1f64; dim];
    for i in 0..dim {
        let mut v = u[i];
        for p in 0..i {
            v -= factor[i * dim + p] * u[p];
        }
        u[i] = v / factor[i * dim + i];
    }
    for i in (0..dim).rev() {
        let mut v = u[i];
        for p in i + 1..dim {
            v -= factor[p * dim + i] * u[p];
        }
        u[i] = v / factor[i * dim + i];
    }
    let gain: f64 = u.iter().sum();
    if !(gain.is_finite() && gain != 0.0) {
        return None;
    }
    let w: Vec<f64> = u.iter().map(|v| v / gain).collect();
    w.iter().all(|v| v.is_finite()).then_some(w)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MvDiagnostics {
    /// Samples where the factorisation failed and uniform weights were used.
    pub fallbacks: usize,
    /// Samples with no signal power at all; uniform weights, output zero.
    pub silent: usize,
}

impl std::ops::Add for MvDiagnostics {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            fallbacks: self.fallbacks + rhs.fallbacks,
            silent: self.silent + rhs.silent,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MvOutput {
    pub image: ScanlineImage,
    pub diagnostics: MvDiagnostics,
}

/// Minimum-variance beamformer with subaperture averaging.
///
/// At each `(l, n)` the weights come from [`mv_covariance`] and are applied
/// to every subaperture snapshot; the output is the mean over subapertures.
pub fn mv_beamform(cube: &TimeAlignedCube, params: &MvParams) -> Result<MvOutput> {
    let (nl, nj, nn) = cube.dims();
    params.validate(nj)?;
    let k = params.subaperture_len;
    let subapertures = nj - k + 1;

    let per_line: Vec<(Vec<f64>, MvDiagnostics)> = (0..nl)
        .into_par_iter()
        .map(|l| {
            let line = cube.line(l);
            let mut diag = MvDiagnostics::default();
            let mut out = vec![0f64; nn];
            let mut snapshot = Vec::with_capacity(nj);
            let mut prefix = Vec::with_capacity(nj + 1);
            let mut mean_sub = vec![0f64; k];
            for (n, o) in out.iter_mut().enumerate() {
                let cov = covariance_at(line, nj, nn, n, params, &mut snapshot, &mut prefix);
                let w = if cov.trace() == 0.0 {
                    diag.silent += 1;
                    vec![1.0 / k as f64; k]
                } else {
                    mv_weights(&cov).unwrap_or_else(|| {
                        diag.fallbacks += 1;
                        vec![1.0 / k as f64; k]
                    })
                };
                // Mean subaperture snapshot at depth n.
                let mut prefix_sum = 0f64;
                prefix.clear();
                prefix.push(0.0);
                for j in 0..nj {
                    prefix_sum += line[j * nn + n] as f64;
                    prefix.push(prefix_sum);
                }
                for (i, m) in mean_sub.iter_mut().enumerate() {
                    *m = (prefix[i + subapertures] - prefix[i]) / subapertures as f64;
                }
                *o = w.iter().zip(&mean_sub).map(|(a, b)| a * b).sum();
            }
            (out, diag)
        })
        .collect();

    let mut z = Vec::with_capacity(nl * nn);
    let mut diagnostics = MvDiagnostics::default();
    for (line, d) in per_line {
        z.extend(line);
        diagnostics = diagnostics + d;
    }
    Ok(MvOutput {
        image: ScanlineImage::new(nl, nn, z)?,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquire::ProbeConfig;

    fn probe(nl: usize, nj: usize, nn: usize) -> ProbeConfig {
        ProbeConfig {
            num_te_events: nl,
            num_rx_active: nj,
            num_depth_samples: nn,
            ..ProbeConfig::default()
        }
    }

    #[test]
    fn zero_delays_are_identity() {
        let p = probe(2, 3, 5);
        let data: Vec<f32> = (0..30).map(|i| i as f32).collect();
        let frame = RFFrame::new(p, data.clone()).unwrap();
        let cube = time_align(&frame, &DelayTable::zeros(3, 5)).unwrap();
        assert_eq!(cube.data(), &data[..]);
    }

    #[test]
    fn delay_shift_inverts_arrival_offset() {
        let p = probe(1, 2, 16);
        let (n0, tau) = (5usize, 3u32);
        let mut frame = RFFrame::zeros(p).unwrap();
        frame.channel_mut(0, 1)[n0 + tau as usize] = 1.0;
        let mut raw = vec![0u32; 32];
        raw[16..].iter_mut().for_each(|t| *t = tau);
        let delays = DelayTable::from_raw(2, 16, raw).unwrap();
        let cube = time_align(&frame, &delays).unwrap();
        let ch = cube.channel(0, 1);
        assert_eq!(ch[n0], 1.0);
        assert_eq!(ch.iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn reads_past_record_are_zero() {
        let p = probe(1, 1, 4);
        let frame = RFFrame::new(p, vec![1.0; 4]).unwrap();
        let delays = DelayTable::from_raw(1, 4, vec![2, 2, 1, 1]).unwrap();
        let cube = time_align(&frame, &delays).unwrap();
        assert_eq!(cube.channel(0, 0), &[1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn time_align_rejects_mismatched_table() {
        let frame = RFFrame::zeros(probe(1, 2, 4)).unwrap();
        assert!(time_align(&frame, &DelayTable::zeros(3, 4)).is_err());
    }

    #[test]
    fn das_of_ones_is_one() {
        let cube = TimeAlignedCube::from_fn(2, 64, 3, |_, _, _| 1.0).unwrap();
        let z = das(&cube, &Apodization::Uniform).unwrap();
        assert!(z.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn das_of_channel_index_is_mean_index() {
        let cube = TimeAlignedCube::from_fn(2, 64, 3, |_, j, _| j as f32).unwrap();
        let z = das(&cube, &Apodization::Uniform).unwrap();
        assert!(z.data().iter().all(|&v| v == 31.5));
    }

    #[test]
    fn one_hot_weights_select_a_channel() {
        let cube = TimeAlignedCube::from_fn(2, 8, 5, |l, j, n| (l * 100 + j * 10 + n) as f32).unwrap();
        let mut w = vec![0.0; 8];
        w[3] = 1.0;
        let z = das(&cube, &Apodization::Static(w)).unwrap();
        for l in 0..2 {
            for n in 0..5 {
                assert_eq!(z.get(l, n), cube.get(l, 3, n) as f64);
            }
        }
    }

    #[test]
    fn adaptive_weights_match_static_when_constant() {
        let cube = TimeAlignedCube::from_fn(3, 4, 6, |l, j, n| ((l + 2 * j + 3 * n) % 7) as f32 - 3.0).unwrap();
        let w = vec![0.1, 0.4, -0.2, 0.7];
        let adaptive: Vec<f64> = (0..3 * 6).flat_map(|_| w.clone()).collect();
        let a = das(&cube, &Apodization::Static(w)).unwrap();
        let b = das(&cube, &Apodization::Adaptive(adaptive)).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn das_rejects_bad_weights() {
        let cube = TimeAlignedCube::from_fn(1, 4, 2, |_, _, _| 1.0).unwrap();
        assert!(matches!(
            das(&cube, &Apodization::Static(vec![1.0; 3])),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            das(&cube, &Apodization::Static(vec![f64::NAN; 4])),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn constant_cube_gives_rank_one_covariance() {
        let c = 1.5f32;
        let cube = TimeAlignedCube::from_fn(1, 8, 4, |_, _, _| c).unwrap();
        let params = MvParams {
            subaperture_len: 4,
            temporal_halfwidth: 0,
            loading_factor: 0.0,
        };
        let r = mv_covariance(&cube, 0, 2, &params).unwrap();
        assert!(r.values.iter().all(|&v| (v - 2.25).abs() < 1e-12));
    }

    #[test]
    fn zero_cube_gives_zero_covariance() {
        let cube = TimeAlignedCube::from_fn(1, 8, 4, |_, _, _| 0.0).unwrap();
        let r = mv_covariance(&cube, 0, 0, &MvParams::for_aperture(8)).unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn subaperture_length_is_bounded() {
        let cube = TimeAlignedCube::from_fn(1, 8, 4, |_, _, _| 0.0).unwrap();
        let mut params = MvParams::for_aperture(8);
        params.subaperture_len = 5;
        assert!(mv_covariance(&cube, 0, 0, &params).is_err());
        params.subaperture_len = 0;
        assert!(mv_beamform(&cube, &params).is_err());
    }

    #[test]
    fn identity_covariance_gives_uniform_weights() {
        let k = 6;
        let mut values = vec![0.0; k * k];
        (0..k).for_each(|i| values[i * k + i] = 1.0);
        let w = mv_weights(&Covariance { dim: k, values }).unwrap();
        assert!(w.iter().all(|&v| (v - 1.0 / k as f64).abs() < 1e-15));
    }

    #[test]
    fn diagonal_covariance_weights() {
        let cov = Covariance {
            dim: 2,
            values: vec![1.0, 0.0, 0.0, 2.0],
        };
        let w = mv_weights(&cov).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn indefinite_covariance_has_no_weights() {
        let cov = Covariance {
            dim: 2,
            values: vec![1.0, 2.0, 2.0, 1.0],
        };
        assert!(mv_weights(&cov).is_none());
    }

    #[test]
    fn coherent_cube_mv_equals_das() {
        // 4 channels, K = 2, explicit loading keeps R invertible.
        let cube = TimeAlignedCube::from_fn(1, 4, 5, |_, _, _| 1.0).unwrap();
        let params = MvParams {
            subaperture_len: 2,
            temporal_halfwidth: 1,
            loading_factor: 0.1,
        };
        let mv = mv_beamform(&cube, &params).unwrap();
        let d = das(&cube, &Apodization::Uniform).unwrap();
        for (a, b) in mv.image.data().iter().zip(d.data()) {
            assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        }
        assert_eq!(mv.diagnostics, MvDiagnostics::default());
    }

    #[test]
    fn silent_samples_are_counted_not_flagged() {
        let cube = TimeAlignedCube::from_fn(2, 4, 3, |_, _, _| 0.0).unwrap();
        let out = mv_beamform(&cube, &MvParams::for_aperture(4)).unwrap();
        assert_eq!(out.diagnostics.silent, 6);
        assert_eq!(out.diagnostics.fallbacks, 0);
        assert!(out.image.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unloaded_rank_deficient_covariance_falls_back() {
        let cube = TimeAlignedCube::from_fn(1, 8, 3, |_, _, _| 1.0).unwrap();
        let params = MvParams {
            subaperture_len: 4,
            temporal_halfwidth: 0,
            loading_factor: 0.0,
        };
        let out = mv_beamform(&cube, &params).unwrap();
        assert_eq!(out.diagnostics.fallbacks, 3);
        assert!(out.image.data().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }
}
