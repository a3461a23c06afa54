//! Federated logistic regression with robust server-side aggregation.
//!
//! Clients run local gradient descent on private shards; a server combines
//! their parameters with the mean, the coordinate-wise median or a trimmed
//! mean. Adversarial clients can submit arbitrary parameters.

pub mod aggregate;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod federation;
pub mod metrics;
pub mod model;
pub mod partition;
pub mod rng;
pub mod screening;
pub mod synthetic;

pub use aggregate::{aggregate, AggregationRule};
pub use dataset::{FeatureMatrix, LabeledDataset, StandardizationStats};
pub use error::{ErrorKind, FlrError, Result};
pub use experiment::{run_experiment, run_sweep, ExperimentConfig, MetricsReport};
pub use federation::{train_binary, train_multiclass, AdversaryModel, FederationConfig, MulticlassParams, RoundLog};
pub use metrics::EvalResult;
pub use model::{ModelParams, TrainingHyperparams};
pub use partition::{ClientShard, PartitionPlan, Regime};
