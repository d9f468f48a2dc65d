//! The full network: a 1x1 convolution embedding, `layers` spatial-spectral
//! blocks (patch cross scanning and bi-directional spectral scanning fused by
//! the mixture gate), a readout of one `D`-vector and a linear classifier.

mod checkpoint;
mod config;
mod network;
mod params;

pub use checkpoint::{
    checkpoint_bytes, load_checkpoint, parse_checkpoint, save_checkpoint, CHECKPOINT_MAGIC,
};
pub use config::{ModelConfig, Readout};
pub use network::{model_backward, model_forward, model_logits, LayerTape, ModelTape};
pub use params::{count_params, init_params, LayerParams, ModelParams, INIT_STD};
