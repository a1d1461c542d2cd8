//! Focused B-mode ultrasound reconstruction from synthetic channel data.
//!
//! The crate covers the whole receive chain of a linear-array scanner:
//! simulated RF acquisition ([`acquire`]), receive focusing and classical
//! beamforming ([`beamform`]), envelope detection and log compression
//! ([`postproc`]), receive-channel subsampling ([`subsample`]), a
//! convolutional network that maps focused, subsampled channel data straight
//! to I/Q ([`neural`]), and image quality measures ([`metrics`]).
//! [`experiment`] ties them together behind a TOML configuration and backs
//! the `deepbf` command line tool.

pub mod acquire;
pub mod beamform;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod metrics;
pub mod neural;
pub mod postproc;
pub mod subsample;

pub use error::{Error, Result};
