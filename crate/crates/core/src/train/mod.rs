//! Cross-entropy training with AdamW and a per-epoch exponential learning
//! rate.

mod config;
mod dataset;
mod loss;
mod optim;
mod trainer;

pub use config::{DataPaths, ResolvedPaths, TrainConfig};
pub use dataset::{check_model, patches, Dataset};
pub use loss::{cross_entropy, predict_label};
pub use optim::{adamw_step, lr_at_epoch, AdamW, AdamWConfig};
pub use trainer::{
    batch_gradients, train, EpochStats, TrainOutcome, Trainer, CHECKPOINT_FILE, LOG_FILE,
};
