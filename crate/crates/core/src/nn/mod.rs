//! A small deterministic feed-forward network trained with AdamW.

pub mod data;
pub mod idx;
pub mod model;
pub mod optim;
pub mod persist;
pub mod tensor;
pub mod train;

pub use data::{DataSplit, Dataset};
pub use model::{
    softmax_cross_entropy, ActivationLayer, ActivationMode, Dense, ForwardCache, Gate, GateSlot,
    Granularity, Gradients, InitStrategy, Layer, Mlp, ModelSpec,
};
pub use optim::{adamw_step, AdamW, Moments};
pub use tensor::Tensor;
pub use train::{evaluate, train, EpochStats, TrainConfig, TrainOutcome};
