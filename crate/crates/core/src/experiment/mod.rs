//! Configuration-driven pipeline behind the `deepbf` command line tool.

pub mod config;
pub mod pipeline;

pub use config::{ExperimentConfig, Method, PhantomSpec, RegionSpec, SCHEMA_VERSION};
pub use pipeline::{
    beamform_iq, build_training_set, derive_seed, evaluate_frame, frame_mask, prepare_frame, simulate_frame, summarize,
    PreparedFrame, SummaryRow, TrainingSet, TrainingSetBuilder,
};
