//! Equivariant convolution on pose graphs with MLP kernels on invariants.

pub mod conv;
pub mod dataset;
pub mod experiment;
pub mod graph;
pub mod mlp;
pub mod train;

pub use conv::{convolve, pair_features};
pub use dataset::{make_self_distill_dataset, make_separation_dataset, Dataset, PlantedCollision, Sample};
pub use graph::PoseGraph;
pub use mlp::{Activation, MlpKernel, Normalization};
pub use experiment::{run_experiment, ExperimentOutcome};
pub use train::{train_kernel, ExperimentConfig, TargetKind, TrainOutcome, TrainingSet};
