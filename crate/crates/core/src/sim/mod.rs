//! Federated training simulator: client behaviours, aggregation rules and the
//! round loop.

pub mod aggregate;
pub mod client;
pub mod engine;

pub use aggregate::{aggregate_trimmed_mean, aggregate_weighted_mean, aggregate_weighted_median, AggregatorKind};
pub use client::{byzantine_update, client_update, Behavior, ClientSpec};
pub use engine::{
    metrics_to_csv, run_training, run_training_observed, select_clients, Participation, RoundMetrics, RoundTrace,
    TrainConfig, TrainingRun, METRICS_HEADER,
};
