//! Spatial-spectral selective state space model for hyperspectral image
//! classification, with hand-written gradients and no tensor framework.
//!
//! Every numeric type is generic over [`Real`]; the aliases below pin the
//! two precisions in use (`f32` for training and inference, `f64` for
//! gradient checks).

#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod bench;
pub mod blocks;
pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod model;
pub mod scalar;
pub mod ssm;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Real;
pub use tensor::Tensor;

pub type SsmParams32 = ssm::SsmParams<f32>;
pub type SsmParams64 = ssm::SsmParams<f64>;
pub type SceneCube32 = data::SceneCube<f32>;
pub type SceneCube64 = data::SceneCube<f64>;
pub type ModelParams32 = model::ModelParams<f32>;
pub type ModelParams64 = model::ModelParams<f64>;
