//! A small dense feed-forward network trained with backpropagation and Adam.
//!
//! Weights are stored `fan_in x fan_out` and applied to row-major batches,
//! so a layer computes `a_out = act(a_in · W + b)`.

pub mod activation;
pub mod adam;
pub mod metrics;
pub mod network;
pub mod train;

pub use activation::{apply_activation, sigmoid, Activation};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use metrics::ConfusionMatrix;
pub use network::{
    backward, batch_loss, forward, forward_batch, loss, suggest_widths, targets_for, ForwardPass,
    Layer, LayerSpec, LossKind, NetworkSpec, Parameters, CLIP,
};
pub use train::{
    evaluate, predict_classes, train, EpochRecord, Evaluation, Model, Standardizer, TrainConfig,
    TrainHistory,
};
