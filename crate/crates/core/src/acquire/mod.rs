//! Probe geometry, receive focusing delays and synthetic RF channel data.
//!
//! The scan model is a linear array with one focused transmit event per scan
//! line. Scan line `l` sits at lateral position `(l - (L-1)/2) * pitch` and
//! its active receive aperture of `J` elements is centred on that line.
//! Depth sample `n` corresponds to depth `n * c / (2 fs)`.

mod usrf;

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use usrf::{decode_rf, encode_rf, read_rf, write_rf, USRF_MAGIC, USRF_VERSION};

/// Fractional -6 dB bandwidth of the simulated transmit pulse.
pub const PULSE_FRACTIONAL_BANDWIDTH: f64 = 0.6;

/// Pulse support on each side of its centre, in envelope standard deviations.
const PULSE_SUPPORT_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub carrier_freq_hz: f64,
    pub sampling_freq_hz: f64,
    pub num_elements: usize,
    pub num_tx_elements: usize,
    /// Number of transmit events, one per scan line (`L`).
    pub num_te_events: usize,
    /// Active receive channels per transmit event (`J`).
    pub num_rx_active: usize,
    pub pitch_m: f64,
    pub element_width_m: f64,
    pub sound_speed_m_s: f64,
    /// Depth samples per channel (`N`).
    pub num_depth_samples: usize,
}

impl Default for ProbeConfig {
    /// L3-12H linear probe on an E-CUBE 12R scanner.
    fn default() -> Self {
        Self {
            carrier_freq_hz: 8.48e6,
            sampling_freq_hz: 40e6,
            num_elements: 192,
            num_tx_elements: 128,
            num_te_events: 96,
            num_rx_active: 64,
            pitch_m: 0.2e-3,
            element_width_m: 0.14e-3,
            sound_speed_m_s: 1540.0,
            num_depth_samples: 2048,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("sampling_freq_hz", self.sampling_freq_hz),
            ("pitch_m", self.pitch_m),
            ("element_width_m", self.element_width_m),
            ("sound_speed_m_s", self.sound_speed_m_s),
        ];
        for (name, v) in reals {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("probe {name} must be positive, got {v}")));
            }
        }
        let ints = [
            ("num_elements", self.num_elements),
            ("num_tx_elements", self.num_tx_elements),
            ("num_te_events", self.num_te_events),
            ("num_rx_active", self.num_rx_active),
            ("num_depth_samples", self.num_depth_samples),
        ];
        for (name, v) in ints {
            if v == 0 {
                return Err(Error::Config(format!("probe {name} must be at least 1")));
            }
        }
        if self.num_rx_active > self.num_elements {
            return Err(Error::Config(format!(
                "num_rx_active ({}) exceeds num_elements ({})",
                self.num_rx_active, self.num_elements
            )));
        }
        Ok(())
    }

    /// Depth in metres of sample `n`.
    pub fn depth_of_sample(&self, n: f64) -> f64 {
        n * self.sound_speed_m_s / (2.0 * self.sampling_freq_hz)
    }

    /// Fractional sample index of depth `depth_m`.
    pub fn sample_of_depth(&self, depth_m: f64) -> f64 {
        depth_m * 2.0 * self.sampling_freq_hz / self.sound_speed_m_s
    }

    /// Lateral position of scan line `l`, in metres from the array centre.
    pub fn scanline_lateral(&self, l: usize) -> f64 {
        (l as f64 - (self.num_te_events as f64 - 1.0) / 2.0) * self.pitch_m
    }

    /// Fractional scan line index of lateral position `lateral_m`.
    pub fn scanline_of_lateral(&self, lateral_m: f64) -> f64 {
        lateral_m / self.pitch_m + (self.num_te_events as f64 - 1.0) / 2.0
    }

    /// Offset of active receive element `j` from the scan line axis.
    pub fn rx_offset(&self, j: usize) -> f64 {
        (j as f64 - (self.num_rx_active as f64 - 1.0) / 2.0) * self.pitch_m
    }

    /// Receive focusing delay in whole samples for a focal point at
    /// `depth_m` seen by an element `offset_m` off the scan line axis.
    pub fn focusing_delay(&self, depth_m: f64, offset_m: f64) -> u32 {
        let extra = depth_m.hypot(offset_m) - depth_m;
        (self.sampling_freq_hz / self.sound_speed_m_s * extra).round() as u32
    }

    pub fn wavelength_m(&self) -> f64 {
        self.sound_speed_m_s / self.carrier_freq_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub lateral_m: f64,
    pub depth_m: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    pub scatterers: Vec<Scatterer>,
}

impl Phantom {
    pub fn new(scatterers: Vec<Scatterer>) -> Result<Self> {
        let phantom = Self { scatterers };
        phantom.validate()?;
        Ok(phantom)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.scatterers.iter().enumerate() {
            if !(s.depth_m > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "scatterer {i} at depth {} m is not in front of the array",
                    s.depth_m
                )));
            }
            if !(s.lateral_m.is_finite() && s.amplitude.is_finite() && s.depth_m.is_finite()) {
                return Err(Error::InvalidArgument(format!("scatterer {i} is not finite")));
            }
        }
        Ok(())
    }

    /// Uniform random scatterers with Gaussian amplitudes in a rectangle,
    /// leaving out those that fall inside an echo-free disk.
    pub fn cyst(spec: &CystPhantom, seed: u64) -> Result<Self> {
        use rand::Rng;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let width = spec.lateral_max_m - spec.lateral_min_m;
        let height = spec.depth_max_m - spec.depth_min_m;
        if !(width > 0.0 && height > 0.0 && spec.depth_min_m > 0.0) {
            return Err(Error::Config("cyst phantom extent is empty".into()));
        }
        let count = (spec.density_per_mm2 * width * height * 1e6).round() as usize;
        let mut scatterers = Vec::with_capacity(count);
        for _ in 0..count {
            let lateral_m = spec.lateral_min_m + rng.gen::<f64>() * width;
            let depth_m = spec.depth_min_m + rng.gen::<f64>() * height;
            let amplitude: f64 = StandardNormal.sample(&mut rng);
            let dx = lateral_m - spec.cyst_lateral_m;
            let dz = depth_m - spec.cyst_depth_m;
            if dx * dx + dz * dz < spec.cyst_radius_m * spec.cyst_radius_m {
                continue;
            }
            scatterers.push(Scatterer {
                lateral_m,
                depth_m,
                amplitude,
            });
        }
        Phantom::new(scatterers)
    }
}

/// Tissue block with an anechoic circular cyst.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CystPhantom {
    pub lateral_min_m: f64,
    pub lateral_max_m: f64,
    pub depth_min_m: f64,
    pub depth_max_m: f64,
    pub cyst_lateral_m: f64,
    pub cyst_depth_m: f64,
    pub cyst_radius_m: f64,
    pub density_per_mm2: f64,
}

/// Raw channel data `x[l][j][n]` for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RFFrame {
    probe: ProbeConfig,
    data: Vec<f32>,
}

impl RFFrame {
    pub fn new(probe: ProbeConfig, data: Vec<f32>) -> Result<Self> {
        probe.validate()?;
        let expected = probe.num_te_events * probe.num_rx_active * probe.num_depth_samples;
        if data.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "RF frame holds {} samples, probe expects {expected}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("RF sample {i} is not finite")));
        }
        Ok(Self { probe, data })
    }

    pub fn zeros(probe: ProbeConfig) -> Result<Self> {
        probe.validate()?;
        let len = probe.num_te_events * probe.num_rx_active * probe.num_depth_samples;
        Ok(Self {
            probe,
            data: vec![0.0; len],
        })
    }

    pub fn probe(&self) -> &ProbeConfig {
        &self.probe
    }

    /// `(L, J, N)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (
            self.probe.num_te_events,
            self.probe.num_rx_active,
            self.probe.num_depth_samples,
        )
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn channel(&self, l: usize, j: usize) -> &[f32] {
        let (_, nj, nn) = self.dims();
        let start = (l * nj + j) * nn;
        &self.data[start..start + nn]
    }

    pub fn channel_mut(&mut self, l: usize, j: usize) -> &mut [f32] {
        let (_, nj, nn) = self.dims();
        let start = (l * nj + j) * nn;
        &mut self.data[start..start + nn]
    }
}

/// Receive focusing delays `tau[j][n]` in whole samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayTable {
    num_rx: usize,
    num_depth: usize,
    tau: Vec<u32>,
}

impl DelayTable {
    pub fn from_raw(num_rx: usize, num_depth: usize, tau: Vec<u32>) -> Result<Self> {
        if tau.len() != num_rx * num_depth {
            return Err(Error::DimensionMismatch(format!(
                "delay table holds {} entries, expected {num_rx} x {num_depth}",
                tau.len()
            )));
        }
        Ok(Self { num_rx, num_depth, tau })
    }

    pub fn zeros(num_rx: usize, num_depth: usize) -> Self {
        Self {
            num_rx,
            num_depth,
            tau: vec![0; num_rx * num_depth],
        }
    }

    pub fn num_rx(&self) -> usize {
        self.num_rx
    }

    pub fn num_depth(&self) -> usize {
        self.num_depth
    }

    pub fn get(&self, j: usize, n: usize) -> u32 {
        self.tau[j * self.num_depth + n]
    }

    pub fn channel(&self, j: usize) -> &[u32] {
        &self.tau[j * self.num_depth..(j + 1) * self.num_depth]
    }
}

/// Geometric receive-focus delays for a transmit on the scan line axis.
///
/// The extra path from a focal point at depth `d` to an element offset `x`
/// from the axis is `sqrt(d^2 + x^2) - d`; the table stores it in samples.
/// The same table serves every scan line.
pub fn compute_delay_table(probe: &ProbeConfig) -> Result<DelayTable> {
    probe.validate()?;
    let nj = probe.num_rx_active;
    let nn = probe.num_depth_samples;
    let mut tau = Vec::with_capacity(nj * nn);
    for j in 0..nj {
        let x = probe.rx_offset(j);
        for n in 0..nn {
            tau.push(probe.focusing_delay(probe.depth_of_sample(n as f64), x));
        }
    }
    DelayTable::from_raw(nj, nn, tau)
}

/// Gaussian-enveloped cosine pulse, centred on zero.
#[derive(Debug, Clone, Copy)]
struct Pulse {
    /// Envelope standard deviation in samples.
    sigma: f64,
    /// Carrier phase advance per sample.
    omega: f64,
    half_support: f64,
}

impl Pulse {
    fn for_probe(probe: &ProbeConfig) -> Self {
        let sigma_s = (2.0 * 2f64.ln()).sqrt() / (PI * PULSE_FRACTIONAL_BANDWIDTH * probe.carrier_freq_hz);
        let sigma = sigma_s * probe.sampling_freq_hz;
        Self {
            sigma,
            omega: 2.0 * PI * probe.carrier_freq_hz / probe.sampling_freq_hz,
            half_support: PULSE_SUPPORT_SIGMAS * sigma,
        }
    }

    /// Adds `scale * p(n - centre)` into `out` over the pulse support.
    ///
    /// Envelope and carrier are advanced by recurrences, so only the first
    /// sample needs transcendental calls.
    fn accumulate(&self, out: &mut [f64], centre: f64, scale: f64) {
        let first = (centre - self.half_support).ceil().max(0.0);
        let last = (centre + self.half_support).floor();
        if last < first || first >= out.len() as f64 {
            return;
        }
        let last = last.min(out.len() as f64 - 1.0) as usize;
        let first = first as usize;

        let inv_two_var = 1.0 / (2.0 * self.sigma * self.sigma);
        let u0 = first as f64 - centre;
        let mut env = (-u0 * u0 * inv_two_var).exp();
        let mut ratio = (-(2.0 * u0 + 1.0) * inv_two_var).exp();
        let ratio_step = (-2.0 * inv_two_var).exp();
        let (mut s, mut c) = (self.omega * u0).sin_cos();
        let (ds, dc) = self.omega.sin_cos();
        for v in &mut out[first..=last] {
            *v += scale * env * c;
            env *= ratio;
            ratio *= ratio_step;
            let c_next = c * dc - s * ds;
            s = s * dc + c * ds;
            c = c_next;
        }
    }
}

/// Synthesises one frame of channel data from a point-scatterer phantom.
///
/// Each transmit is a point source on the scan line axis. A scatterer echoes
/// the pulse back with amplitude `a / (d_tx * d_rx)` after the two-way time
/// of flight. White Gaussian noise is drawn from an independent stream per
/// `(l, j)` channel derived from `seed`, so the result does not depend on
/// scheduling.
pub fn simulate_rf(probe: &ProbeConfig, phantom: &Phantom, noise_std: f64, seed: u64) -> Result<RFFrame> {
    probe.validate()?;
    phantom.validate()?;
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise_std must be non-negative, got {noise_std}"
        )));
    }
    let (nl, nj, nn) = (probe.num_te_events, probe.num_rx_active, probe.num_depth_samples);
    let pulse = Pulse::for_probe(probe);
    let samples_per_metre = probe.sampling_freq_hz / probe.sound_speed_m_s;

    let mut data = vec![0f32; nl * nj * nn];
    data.par_chunks_mut(nj * nn).enumerate().for_each(|(l, line)| {
        let axis = probe.scanline_lateral(l);
        let mut acc = vec![0f64; nn];
        for (j, out) in line.chunks_mut(nn).enumerate() {
            acc.iter_mut().for_each(|v| *v = 0.0);
            let element = axis + probe.rx_offset(j);
            for s in &phantom.scatterers {
                let d_tx = (s.lateral_m - axis).hypot(s.depth_m);
                let d_rx = (s.lateral_m - element).hypot(s.depth_m);
                let centre = (d_tx + d_rx) * samples_per_metre;
                pulse.accumulate(&mut acc, centre, s.amplitude / (d_tx * d_rx));
            }
            if noise_std > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((l * nj + j) as u64);
                for v in acc.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v += noise_std * z;
                }
            }
            for (o, v) in out.iter_mut().zip(&acc) {
                *o = *v as f32;
            }
        }
    });
    RFFrame::new(*probe, data)
}
