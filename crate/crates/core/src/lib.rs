//! Laboratory for VAEs whose loss-term weights are learned.
//!
//! The crate is built bottom-up from a small reverse-mode autodiff engine:
//!
//! - [`tensor`] / [`autodiff`]: dense row-major tensors and a tape recording
//!   every op, with im2col convolutions and a finite-difference checker.
//! - [`nets`]: MLP and CNN encoder/decoder pairs with a Gaussian posterior.
//! - [`losses`]: reconstruction and KL terms and every weighting regime,
//!   including the learnable `σ₀`, `σ₁` objective and the PI controller.
//! - [`optim`]: Adam and the warm-up/cosine learning-rate schedule.
//! - [`data`]: the procedural mini-dSprites generator and the FDS container.
//! - [`metrics`]: β-VAE, FactorVAE, MIG, SAP, explicitness and IRS scores.
//! - [`harness`]: seeded training runs, CSV logs, sweeps, ablation and
//!   latent traversals; [`checkpoint`] stores models with their weights.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the harness and
//! metrics run at `f64`. The aliases below name the concrete instantiations.

// `Var::add`/`sub`/`mul` return `Result`, so the operator traits do not fit.
#![allow(clippy::should_implement_trait)]
// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod checkpoint;
pub mod data;
pub mod error;
pub mod harness;
pub mod losses;
pub mod metrics;
pub mod nets;
pub mod optim;
pub mod scalar;
pub mod seed;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor64 = tensor::Tensor<f64>;
pub type Tensor32 = tensor::Tensor<f32>;
pub type Tape64 = autodiff::Tape<f64>;
pub type Tape32 = autodiff::Tape<f32>;
pub type VaeModel64 = nets::VaeModel<f64>;
pub type VaeModel32 = nets::VaeModel<f32>;
pub type LossWeights64 = losses::LossWeights<f64>;
pub type LossWeights32 = losses::LossWeights<f32>;
pub type Adam64 = optim::AdamState<f64>;
pub type Adam32 = optim::AdamState<f32>;
pub type Checkpoint64 = checkpoint::Checkpoint<f64>;
pub type Checkpoint32 = checkpoint::Checkpoint<f32>;
