//! The federated training loop.
//!
//! Declared sizes are collected and preprocessed once. Each round selects a
//! client subset, collects honest or adversarial updates, aggregates them with
//! the preprocessed weights and evaluates on the held-out set. Updates are
//! always reduced in ascending client id, so the parallel and sequential paths
//! produce the same bits.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::index;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::sim::aggregate::AggregatorKind;
use crate::sim::client::{byzantine_update, client_update, ClientSpec};
use crate::task::{evaluate, Dataset, Model, ParamVector};
use crate::weights::{preprocess, PreprocessMode, WeightVector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Participation {
    Count(usize),
    Fraction(f64),
}

impl Participation {
    /// Clients per round for a population of `k`.
    pub fn resolve(&self, k: usize) -> Result<usize> {
        let n = match *self {
            Participation::Count(c) => c,
            Participation::Fraction(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::InvalidParameter(format!("participation fraction {f} not in (0, 1]")));
                }
                ((f * k as f64).round() as usize).max(1)
            }
        };
        if n == 0 || n > k {
            return Err(Error::InvalidParameter(format!("{n} clients per round out of {k}")));
        }
        Ok(n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub rounds: u64,
    pub participation: Participation,
    pub eta: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Share of its usable samples a client visits in one round.
    pub local_fraction: f64,
    pub preprocess: PreprocessMode,
    pub aggregator: AggregatorKind,
    pub honest_use_all_samples: bool,
    pub master_seed: u64,
    /// Run the client updates of a round on the rayon pool.
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            rounds: 100,
            participation: Participation::Fraction(1.0),
            eta: 0.1,
            epochs: 1,
            batch_size: 10,
            local_fraction: 1.0,
            preprocess: PreprocessMode::Passthrough,
            aggregator: AggregatorKind::WeightedMean,
            honest_use_all_samples: true,
            master_seed: 0,
            parallel: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("learning rate {} must be positive", self.eta)));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be at least 1".into()));
        }
        if !(self.local_fraction > 0.0 && self.local_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!("local fraction {} not in (0, 1]", self.local_fraction)));
        }
        if let AggregatorKind::TrimmedMean { beta } = self.aggregator {
            if !(0.0..0.5).contains(&beta) {
                return Err(Error::AllMassTrimmed(beta));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundMetrics {
    pub round: u64,
    pub test_accuracy: f64,
    pub test_loss: f64,
    pub aggregate_norm: f64,
    /// False on the terminal record of a diverged run.
    pub finite: bool,
}

pub const METRICS_HEADER: &str = "round,test_accuracy,test_loss,aggregate_norm";

pub fn metrics_to_csv(metrics: &[RoundMetrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for m in metrics {
        let _ = writeln!(out, "{},{},{},{}", m.round, m.test_accuracy, m.test_loss, m.aggregate_norm);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingRun {
    pub metrics: Vec<RoundMetrics>,
    pub params: ParamVector,
}

impl TrainingRun {
    pub fn diverged(&self) -> bool {
        self.metrics.last().is_some_and(|m| !m.finite)
    }

    pub fn final_accuracy(&self) -> Option<f64> {
        self.metrics.last().map(|m| m.test_accuracy)
    }
}

/// What the server fed to the aggregator in one round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundTrace<'a> {
    pub round: u64,
    pub selected: &'a [u64],
    pub weights: &'a [f64],
}

/// Uniform sample of `count` positions out of `0..k`, ascending. Every
/// position when `count == k`.
pub fn select_clients(round: u64, k: usize, count: usize, master_seed: u64) -> Vec<usize> {
    if count >= k {
        return (0..k).collect();
    }
    let mut rng = rng::stream(master_seed, &[tag::SELECT, round]);
    let mut picked = index::sample(&mut rng, k, count).into_vec();
    picked.sort_unstable();
    picked
}

pub fn run_training<M: Model + ?Sized>(
    model: &M,
    clients: &[ClientSpec],
    testset: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainingRun> {
    run_training_observed(model, clients, testset, cfg, |_| {})
}

/// [`run_training`] with a hook that sees the ids and weights handed to the
/// aggregator each round.
pub fn run_training_observed<M, F>(
    model: &M,
    clients: &[ClientSpec],
    testset: &Dataset,
    cfg: &TrainConfig,
    mut observe: F,
) -> Result<TrainingRun>
where
    M: Model + ?Sized,
    F: FnMut(&RoundTrace<'_>),
{
    cfg.validate()?;
    if clients.is_empty() {
        return Err(Error::EmptyWeights);
    }
    for c in clients {
        c.validate()?;
    }
    let mut clients: Vec<&ClientSpec> = clients.iter().collect();
    clients.sort_by_key(|c| c.id);

    let declared = WeightVector::with_ids(
        clients.iter().map(|c| c.declared_size).collect(),
        clients.iter().map(|c| c.id).collect(),
    )?;
    let assigned: HashMap<u64, u64> = preprocess(&declared, &cfg.preprocess)?.iter().collect();
    let per_round = cfg.participation.resolve(clients.len())?;

    let mut w = model.initial_params(&mut rng::stream(cfg.master_seed, &[tag::INIT]));
    let mut metrics = Vec::with_capacity(cfg.rounds as usize);
    for round in 1..=cfg.rounds {
        let selected: Vec<&ClientSpec> = select_clients(round, clients.len(), per_round, cfg.master_seed)
            .into_iter()
            .map(|i| clients[i])
            .collect();
        let update = |c: &&ClientSpec| -> Result<ParamVector> {
            match byzantine_update(c.behavior, &w) {
                Some(u) => Ok(u),
                None => client_update(model, &w, c, assigned[&c.id], cfg, round),
            }
        };
        let updates: Vec<ParamVector> = if cfg.parallel {
            selected.par_iter().map(update).collect::<Result<_>>()?
        } else {
            selected.iter().map(update).collect::<Result<_>>()?
        };
        let ids: Vec<u64> = selected.iter().map(|c| c.id).collect();
        let weights: Vec<f64> = ids.iter().map(|id| assigned[id] as f64).collect();
        observe(&RoundTrace { round, selected: &ids, weights: &weights });

        w = cfg.aggregator.aggregate(&updates, &weights)?;
        let norm = w.norm();
        if !w.is_finite() {
            metrics.push(RoundMetrics {
                round,
                test_accuracy: f64::NAN,
                test_loss: f64::NAN,
                aggregate_norm: norm,
                finite: false,
            });
            break;
        }
        let (test_accuracy, test_loss) = evaluate(model, &w, testset);
        metrics.push(RoundMetrics { round, test_accuracy, test_loss, aggregate_norm: norm, finite: true });
    }
    Ok(TrainingRun { metrics, params: w })
}
