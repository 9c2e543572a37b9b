//! Learning workload: synthetic data, client partitions, models and the
//! objective-gap bound.

pub mod bound;
pub mod data;
pub mod model;
pub mod partition;

pub use bound::{objective_gap_bound, GapBound};
pub use data::{generate_synthetic_dataset, partition_dataset, Dataset, SyntheticTask};
pub use model::{client_objective, evaluate, gradient, loss, DropoutMask, Model, ModelSpec, ParamVector};
pub use partition::{generate_partition, PartitionSpec};
