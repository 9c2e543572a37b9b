//! Byzantine-robust client weighting for federated learning.
//!
//! - [`weights`]: maximal weight proportion, truncation and the exact search
//!   for the largest admissible cap.
//! - [`sample_check`]: a concentration certificate that a cap is safe, from a
//!   sample of declared sizes.
//! - [`task`]: synthetic classification data, lognormal partitions, models and
//!   the objective-gap bound.
//! - [`sim`]: the federated training loop with attacks and robust aggregators.
//! - [`config`], [`experiment`] and [`cli`]: the experiment grid runner behind
//!   the `byzweight` binary.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod rng;
pub mod sample_check;
pub mod sim;
pub mod task;
pub mod weights;

pub use error::{Error, Result};
