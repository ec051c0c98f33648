//! Convolutional decoder for measurement-outcome images.
//!
//! The network is the eight-layer stack
//!
//! ```text
//! conv 4×4 (F filters) → ReLU → conv 3×3 (F) → ReLU → max-pool 2×2
//!   → dropout → flatten → dense (N_n) → ReLU → dropout → dense (1) → sigmoid
//! ```
//!
//! with `F = L_q/2` for a window `L_q` sites wide and
//! `N_n = 512·(1 + 2⌊N_t/2000⌋)` for `N_t` training samples. Everything is
//! written against `ndarray` matrices (im2col convolutions), generic over
//! `f32` for training and `f64` for gradient checks.

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod model;
pub mod train;

pub use checkpoint::{load_model, save_model};
pub use data::Examples;
pub use error::{NnError, Result};
pub use gradcheck::gradient_check;
pub use model::{Cnn, ModelConfig, Params, Real};
pub use train::{evaluate, min_training_samples, train, EvalReport, MinSamples, TrainConfig, TrainReport};
