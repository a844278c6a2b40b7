//! Desk-scale network trainer that produces per-epoch weight runs.

pub mod data;
pub mod experiment;
pub mod mlp;

pub use data::{make_blobs, BlobsConfig, SyntheticDataset};
pub use experiment::{
    context_shift_experiment, widen_output, ExperimentConfig, ShiftOutcome, TaskConfig,
};
pub use mlp::{layer_name, train, Mlp, MlpConfig, TrainOutcome};
