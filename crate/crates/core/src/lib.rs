//! Federated-averaging simulator for studying label-flipping data poisoning
//! on a dense skin-lesion classifier.

pub mod adversary;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod federation;
pub mod metrics;
pub mod nn;
pub mod rng;

pub use adversary::AttackSpec;
pub use dataset::{ClientShard, LabeledDataset, SynthSpec};
pub use error::{Error, ErrorCategory, Result};
pub use federation::{HyperParams, RoundRecord, RunResult};
pub use metrics::{ClassificationReport, ConfusionMatrix};
pub use nn::{Batch, Gradients, MlpConfig, ModelParams, OptimizerState};
