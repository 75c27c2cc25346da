//! Gamma/hadron separation toolkit: event data handling, a small MLP
//! classifier (stochastic or BFGS training), a self-organizing map with
//! U-matrix clustering, and the experiment pipelines that tie them
//! together. Everything is deterministic given a seed.

pub mod data;
pub mod mlp;
pub mod pipeline;
pub mod seed;
pub mod som;
pub mod umatrix;

pub use data::{ClassLabel, DataError, Dataset, EventRecord, FeatureVector, Normalizer};
pub use mlp::{LabeledSample, MlpError, MlpLayout, MlpNetwork, MlpTrainConfig, TrainMethod, TrainRecordMlp};
pub use pipeline::{ConfusionMatrix, HybridParams, OutputHistogram, PipelineError, SynthConfig};
pub use som::{Kernel, SomError, SomMap, SomTopology, SomTrainConfig, SomTrainRecord, TopologyKind};
pub use umatrix::{ClusterAssignment, UMatrix};
