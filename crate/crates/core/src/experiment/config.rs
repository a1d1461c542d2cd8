use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::acquire::{CystPhantom, Phantom, ProbeConfig, Scatterer};
use crate::beamform::MvParams;
use crate::error::{Error, Result};
use crate::metrics::Region;
use crate::neural::{NetworkConfig, TrainConfig};
use crate::postproc::DEFAULT_DYNAMIC_RANGE_DB;
use crate::subsample::{Scheme, STANDARD_RATES};

/// Version of the configuration schema this build understands.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Das,
    Mv,
    Deepbf,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Das => "das",
            Method::Mv => "mv",
            Method::Deepbf => "deepbf",
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "das" => Ok(Method::Das),
            "mv" => Ok(Method::Mv),
            "deepbf" => Ok(Method::Deepbf),
            other => Err(Error::InvalidArgument(format!(
                "unknown beamforming method {other} (expected das, mv or deepbf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PhantomSpec {
    /// Fresh random speckle with an anechoic cyst in every frame.
    Cyst(CystPhantom),
    /// The same fixed scatterers in every frame.
    Points { scatterers: Vec<Scatterer> },
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec::Cyst(CystPhantom {
            lateral_min_m: -10e-3,
            lateral_max_m: 10e-3,
            depth_min_m: 9e-3,
            depth_max_m: 23e-3,
            cyst_lateral_m: -2.5e-3,
            cyst_depth_m: 16e-3,
            cyst_radius_m: 6e-3,
            density_per_mm2: 20.0,
        })
    }
}

impl PhantomSpec {
    pub fn build(&self, seed: u64) -> Result<Phantom> {
        match self {
            PhantomSpec::Cyst(c) => Phantom::cyst(c, seed),
            PhantomSpec::Points { scatterers } => Phantom::new(scatterers.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub num_frames: usize,
    /// Standard deviation of the additive channel noise, in RF units.
    pub noise_std: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            num_frames: 4,
            noise_std: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsamplingConfig {
    pub schemes: Vec<Scheme>,
    pub n_keep: Vec<usize>,
    pub seed: u64,
}

impl Default for SubsamplingConfig {
    fn default() -> Self {
        Self {
            schemes: vec![Scheme::Variable],
            n_keep: STANDARD_RATES.to_vec(),
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamformerConfig {
    pub method: Method,
    /// Minimum-variance settings; sized from the aperture when absent.
    pub mv: Option<MvParams>,
    pub checkpoint: Option<PathBuf>,
    pub dynamic_range_db: f64,
}

impl Default for BeamformerConfig {
    fn default() -> Self {
        Self {
            method: Method::Das,
            mv: None,
            checkpoint: None,
            dynamic_range_db: DEFAULT_DYNAMIC_RANGE_DB,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkPreset {
    Desk,
    Full,
}

/// Network geometry; channel counts and width follow the probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSpec {
    pub preset: NetworkPreset,
    pub num_conv_layers: Option<usize>,
    pub hidden_channels: Option<usize>,
    pub skip_concat_at: Option<usize>,
    pub batchnorm_epsilon: Option<f64>,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self {
            preset: NetworkPreset::Desk,
            num_conv_layers: None,
            hidden_channels: None,
            skip_concat_at: None,
            batchnorm_epsilon: None,
        }
    }
}

impl NetworkSpec {
    pub fn resolve(&self, probe: &ProbeConfig) -> NetworkConfig {
        let mut c = match self.preset {
            NetworkPreset::Desk => NetworkConfig::desk(probe.num_te_events),
            NetworkPreset::Full => NetworkConfig::full(probe.num_te_events),
        };
        c.input_channels = probe.num_rx_active;
        if let Some(n) = self.num_conv_layers {
            c.num_conv_layers = n;
            c.skip_concat_at = n.saturating_sub(1);
        }
        if let Some(h) = self.hidden_channels {
            c.hidden_channels = h;
        }
        if let Some(s) = self.skip_concat_at {
            c.skip_concat_at = s;
        }
        if let Some(e) = self.batchnorm_epsilon {
            c.batchnorm_epsilon = e;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    /// Frames `0..train_frames` are used for training, the rest are held out.
    pub train_frames: usize,
    pub windows_per_frame: usize,
    /// Channel counts drawn uniformly per training window.
    pub rates: Vec<usize>,
    pub scheme: Scheme,
    /// Depth range the training windows are drawn from; whole record when
    /// absent.
    pub depth_min_m: Option<f64>,
    pub depth_max_m: Option<f64>,
    pub optimizer: TrainConfig,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            train_frames: 3,
            windows_per_frame: 32,
            rates: STANDARD_RATES.to_vec(),
            scheme: Scheme::Variable,
            depth_min_m: None,
            depth_max_m: None,
            optimizer: TrainConfig::default(),
        }
    }
}

/// Region of interest in physical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionSpec {
    Rect {
        lateral_min_m: f64,
        lateral_max_m: f64,
        depth_min_m: f64,
        depth_max_m: f64,
    },
    Disk {
        lateral_m: f64,
        depth_m: f64,
        radius_m: f64,
    },
}

impl RegionSpec {
    /// Pixel region in an image whose first row is depth sample `n_offset`.
    pub fn to_region(&self, probe: &ProbeConfig, n_offset: usize) -> Result<Region> {
        let n_of = |d: f64| probe.sample_of_depth(d) - n_offset as f64;
        match *self {
            RegionSpec::Rect {
                lateral_min_m,
                lateral_max_m,
                depth_min_m,
                depth_max_m,
            } => {
                let l0 = probe.scanline_of_lateral(lateral_min_m).ceil();
                let l1 = probe.scanline_of_lateral(lateral_max_m).floor();
                let n0 = n_of(depth_min_m).ceil();
                let n1 = n_of(depth_max_m).floor();
                if l0 < 0.0 || n0 < 0.0 || l1 < l0 || n1 < n0 {
                    return Err(Error::Config(format!("region {self:?} does not cover any pixel")));
                }
                Ok(Region::Rect {
                    l0: l0 as usize,
                    n0: n0 as usize,
                    l1: l1 as usize,
                    n1: n1 as usize,
                })
            }
            RegionSpec::Disk {
                lateral_m,
                depth_m,
                radius_m,
            } => Ok(Region::Disk {
                center_l: probe.scanline_of_lateral(lateral_m),
                center_n: n_of(depth_m),
                radius_l: radius_m / probe.pitch_m,
                radius_n: probe.sample_of_depth(radius_m),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub methods: Vec<Method>,
    /// Frames to score; the held-out frames when absent.
    pub frames: Option<Vec<usize>>,
    /// Depth window the metrics are computed over.
    pub depth_min_m: f64,
    pub depth_max_m: f64,
    pub background: RegionSpec,
    pub anechoic: RegionSpec,
    pub gcnr_bins: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::Das, Method::Deepbf],
            frames: None,
            depth_min_m: 9.5e-3,
            depth_max_m: 22.5e-3,
            background: RegionSpec::Rect {
                lateral_min_m: 5e-3,
                lateral_max_m: 9e-3,
                depth_min_m: 12e-3,
                depth_max_m: 20e-3,
            },
            anechoic: RegionSpec::Disk {
                lateral_m: -2.5e-3,
                depth_m: 16e-3,
                radius_m: 4.5e-3,
            },
            gcnr_bins: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Where every artifact is written; relative paths are taken from the
    /// configuration file's directory.
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Single-threaded execution.
    pub reproducible: bool,
    pub probe: ProbeConfig,
    pub phantom: PhantomSpec,
    pub simulation: SimulationConfig,
    pub subsampling: SubsamplingConfig,
    pub beamformer: BeamformerConfig,
    pub network: NetworkSpec,
    pub training: TrainingConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            output_dir: PathBuf::from("out"),
            seed: 1,
            reproducible: false,
            probe: ProbeConfig {
                num_depth_samples: 1250,
                ..ProbeConfig::default()
            },
            phantom: PhantomSpec::default(),
            simulation: SimulationConfig::default(),
            subsampling: SubsamplingConfig::default(),
            beamformer: BeamformerConfig::default(),
            network: NetworkSpec::default(),
            training: TrainingConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a configuration file, resolving relative paths against its
    /// directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        if let Some(ck) = &cfg.beamformer.checkpoint {
            if ck.is_relative() {
                cfg.beamformer.checkpoint = Some(base.join(ck));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn network_config(&self) -> NetworkConfig {
        self.network.resolve(&self.probe)
    }

    pub fn mv_params(&self) -> MvParams {
        self.beamformer
            .mv
            .unwrap_or_else(|| MvParams::for_aperture(self.probe.num_rx_active))
    }

    /// Frames scored by `evaluate`.
    pub fn evaluation_frames(&self) -> Vec<usize> {
        self.evaluation
            .frames
            .clone()
            .unwrap_or_else(|| (self.training.train_frames..self.simulation.num_frames).collect())
    }

    /// Depth sample range `n0..n1` of the metric window.
    pub fn evaluation_depth_range(&self) -> Result<(usize, usize)> {
        let n0 = self.probe.sample_of_depth(self.evaluation.depth_min_m).ceil().max(0.0) as usize;
        let n1 = (self.probe.sample_of_depth(self.evaluation.depth_max_m).floor() as usize + 1)
            .min(self.probe.num_depth_samples);
        if n0 >= n1 {
            return Err(Error::Config("evaluation depth window is empty".into()));
        }
        Ok((n0, n1))
    }

    /// Depth sample range `n0..n1` training windows are drawn from.
    pub fn training_depth_range(&self) -> Result<(usize, usize)> {
        let nn = self.probe.num_depth_samples;
        let n0 = self
            .training
            .depth_min_m
            .map_or(0, |d| self.probe.sample_of_depth(d).ceil().max(0.0) as usize);
        let n1 = self
            .training
            .depth_max_m
            .map_or(nn, |d| (self.probe.sample_of_depth(d).floor() as usize + 1).min(nn));
        if n1 < n0 + crate::neural::WINDOW_DEPTH {
            return Err(Error::Config("training depth range is shorter than one window".into()));
        }
        Ok((n0, n1))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        self.probe.validate().map_err(|e| Error::Config(e.to_string()))?;
        let j = self.probe.num_rx_active;
        if self.simulation.num_frames == 0 {
            return bad("simulation.num_frames must be positive".into());
        }
        if !(self.simulation.noise_std >= 0.0 && self.simulation.noise_std.is_finite()) {
            return bad("simulation.noise_std must be non-negative".into());
        }
        for &k in self.subsampling.n_keep.iter().chain(&self.training.rates) {
            if k < 2 || k > j {
                return bad(format!("n_keep {k} outside 2..={j}"));
            }
        }
        if self.subsampling.schemes.is_empty() || self.subsampling.n_keep.is_empty() {
            return bad("subsampling needs at least one scheme and one n_keep".into());
        }
        if self.training.rates.is_empty() {
            return bad("training.rates must not be empty".into());
        }
        if self.training.train_frames > self.simulation.num_frames {
            return bad("training.train_frames exceeds simulation.num_frames".into());
        }
        if self.training.windows_per_frame == 0 {
            return bad("training.windows_per_frame must be positive".into());
        }
        if !(self.beamformer.dynamic_range_db > 0.0) {
            return bad("beamformer.dynamic_range_db must be positive".into());
        }
        if self.probe.num_depth_samples < crate::neural::WINDOW_DEPTH {
            return bad("probe.num_depth_samples must be at least 3".into());
        }
        self.mv_params().validate(j).map_err(|e| Error::Config(e.to_string()))?;
        self.network_config().validate()?;
        self.training.optimizer.validate()?;
        self.training_depth_range()?;
        self.evaluation_depth_range()?;
        if let Some(frames) = &self.evaluation.frames {
            if let Some(&f) = frames.iter().find(|&&f| f >= self.simulation.num_frames) {
                return bad(format!("evaluation frame {f} was never simulated"));
            }
        }
        if self.evaluation.gcnr_bins == 0 {
            return bad("evaluation.gcnr_bins must be positive".into());
        }
        Ok(())
    }
}
