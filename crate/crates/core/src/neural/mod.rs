//! Convolutional beamformer mapping focused channel data to I/Q.
//!
//! The input is a window of three consecutive depth planes of the aligned
//! cube with the receive channels as feature channels, shape `J x 3 x L`.
//! Dropped channels are zero. The output is `2 x 3 x L` (I and Q over the
//! same depths).

pub mod checkpoint;
pub mod gradcheck;
pub mod infer;
pub mod layers;
pub mod network;
pub mod tensor;
pub mod train;

pub use checkpoint::Checkpoint;
pub use gradcheck::{batchnorm_gradient_check, conv2d_gradient_check, gradient_check, GradCheckReport};
pub use infer::{infer_frame, window_input, window_starts, window_target};
pub use layers::{BatchNorm, Conv2d};
pub use network::{loss_mse, sgd_step, xavier_init, Mode, Network, NetworkConfig, WINDOW_DEPTH};
pub use tensor::{Real, Tensor};
pub use train::{train, train_with_progress, Sample, TrainConfig, TrainOutcome};
