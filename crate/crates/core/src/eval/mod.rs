//! Accuracy metrics, test-set evaluation and classification maps.

mod metrics;
mod predict;

pub use metrics::{ConfusionMatrix, MetricsReport};
pub use predict::{evaluate, predict_pixels, render_class_map, write_rgb};
