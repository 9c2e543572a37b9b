//! The experiment grid: preprocess modes x aggregators x attack scenarios.
//!
//! One synthetic workload (data, partition, honest clients) is built per
//! config and shared by every cell. A scenario turns a seeded choice of
//! clients Byzantine; `single` and `fraction` draw from the same client
//! permutation, so the single attacker is also one of the fraction attackers.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::config::{AggregatorName, AttackCount, AttackKind, ExperimentConfig, PreprocessKind};
use crate::error::Result;
use crate::rng::{self, tag};
use crate::sim::{metrics_to_csv, run_training, ClientSpec, TrainingRun};
use crate::task::{generate_partition, partition_dataset, Dataset, ModelSpec, PartitionSpec, SyntheticTask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub kind: AttackKind,
    /// `None` exactly when `kind` is `None`.
    pub count: Option<AttackCount>,
}

impl Scenario {
    pub const NONE: Scenario = Scenario { kind: AttackKind::None, count: None };

    pub fn new(kind: AttackKind, count: AttackCount) -> Self {
        if kind == AttackKind::None {
            Self::NONE
        } else {
            Self { kind, count: Some(count) }
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            AttackKind::None => return f.write_str("none"),
            AttackKind::Negation => "negation",
            AttackKind::LabelShift => "label_shift",
        };
        let count = match self.count {
            Some(AttackCount::Single) | None => "single",
            Some(AttackCount::Fraction) => "fraction",
        };
        write!(f, "{kind}_{count}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CellKey {
    pub preprocess: PreprocessKind,
    pub aggregator: AggregatorName,
    pub scenario: Scenario,
}

impl CellKey {
    pub fn preprocess_name(&self) -> &'static str {
        match self.preprocess {
            PreprocessKind::Passthrough => "passthrough",
            PreprocessKind::Ignore => "ignore",
            PreprocessKind::Truncate => "truncate",
        }
    }

    pub fn aggregator_name(&self) -> &'static str {
        match self.aggregator {
            AggregatorName::Mean => "mean",
            AggregatorName::Median => "median",
            AggregatorName::Trimmed => "trimmed",
        }
    }

    pub fn file_name(&self) -> String {
        format!("metrics_{}_{}_{}.csv", self.preprocess_name(), self.aggregator_name(), self.scenario)
    }
}

/// Shared inputs of every cell.
#[derive(Clone, Debug)]
pub struct Workload {
    pub model: ModelSpec,
    /// Honest clients in ascending id order.
    pub clients: Vec<ClientSpec>,
    pub testset: Dataset,
    /// Client positions in the order they turn Byzantine.
    pub attack_order: Vec<usize>,
}

pub fn build_workload(cfg: &ExperimentConfig) -> Result<Workload> {
    let seed = cfg.seeds.master;
    let t = &cfg.task;
    let task = SyntheticTask::new(t.dim, t.classes, t.separation, seed)?;
    let train = task.train_set(t.n_train, seed);
    let testset = task.test_set(t.n_test, seed);
    let sizes = generate_partition(&PartitionSpec {
        total: t.n_train as u64,
        clients: cfg.partition.clients,
        mu: cfg.partition.mu,
        sigma: cfg.partition.sigma,
        seed,
    })?;
    let clients = partition_dataset(&train, &sizes, seed)?
        .into_iter()
        .enumerate()
        .map(|(i, shard)| ClientSpec::honest(i as u64, shard))
        .collect::<Vec<_>>();
    let mut attack_order: Vec<usize> = (0..clients.len()).collect();
    attack_order.shuffle(&mut rng::stream(seed, &[tag::ATTACKERS]));
    Ok(Workload { model: t.model_spec(), clients, testset, attack_order })
}

impl Workload {
    /// Clients with the scenario's attackers switched to their behavior and
    /// inflated declarations.
    pub fn clients_for(&self, scenario: Scenario, cfg: &ExperimentConfig) -> Vec<ClientSpec> {
        let mut clients = self.clients.clone();
        let (attackers, declared) = match scenario.count {
            None => return clients,
            Some(AttackCount::Single) => (1, cfg.attack.declared_single),
            Some(AttackCount::Fraction) => {
                let m = (cfg.attack.fraction * clients.len() as f64).round() as usize;
                (m.max(1), cfg.attack.declared_fraction)
            }
        };
        for &i in self.attack_order.iter().take(attackers) {
            clients[i].behavior = scenario.kind.behavior();
            clients[i].declared_size = declared;
        }
        clients
    }
}

/// Attack scenarios in config order, without duplicates.
pub fn scenarios(cfg: &ExperimentConfig) -> Vec<Scenario> {
    let mut out = Vec::new();
    for &kind in &cfg.attack.kinds {
        let counts: Vec<AttackCount> = if kind == AttackKind::None { vec![AttackCount::Single] } else { cfg.attack.counts.clone() };
        for count in counts {
            let s = Scenario::new(kind, count);
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    out
}

pub fn grid(cfg: &ExperimentConfig) -> Vec<CellKey> {
    let mut cells = Vec::new();
    for &preprocess in &cfg.preprocess.modes {
        for &aggregator in &cfg.aggregator.kinds {
            for scenario in scenarios(cfg) {
                let key = CellKey { preprocess, aggregator, scenario };
                if !cells.contains(&key) {
                    cells.push(key);
                }
            }
        }
    }
    cells
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub key: CellKey,
    pub run: TrainingRun,
}

pub fn run_cell(workload: &Workload, cfg: &ExperimentConfig, key: CellKey) -> Result<CellResult> {
    let train = cfg.train_config(key.preprocess, key.aggregator)?;
    let clients = workload.clients_for(key.scenario, cfg);
    let run = run_training(&workload.model, &clients, &workload.testset, &train)?;
    Ok(CellResult { key, run })
}

/// Every cell of the grid, in grid order. Cells run on the rayon pool when
/// `training.parallel` is set; the results do not depend on it.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    let workload = build_workload(cfg)?;
    let cells = grid(cfg);
    if cfg.training.parallel {
        cells.par_iter().map(|&k| run_cell(&workload, cfg, k)).collect()
    } else {
        cells.iter().map(|&k| run_cell(&workload, cfg, k)).collect()
    }
}

pub const SUMMARY_HEADER: &str = "preprocess,aggregator,attack,final_accuracy,final_loss,rounds,diverged";

pub fn summary_csv(results: &[CellResult]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in results {
        let last = r.run.metrics.last();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.key.preprocess_name(),
            r.key.aggregator_name(),
            r.key.scenario,
            last.map_or(f64::NAN, |m| m.test_accuracy),
            last.map_or(f64::NAN, |m| m.test_loss),
            r.run.metrics.len(),
            r.run.diverged(),
        );
    }
    out
}

/// Write one metrics file per cell plus `summary.csv`; returns the paths.
pub fn write_results(dir: &Path, results: &[CellResult]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(results.len() + 1);
    for r in results {
        let path = dir.join(r.key.file_name());
        fs::write(&path, metrics_to_csv(&r.run.metrics))?;
        written.push(path);
    }
    let path = dir.join("summary.csv");
    fs::write(&path, summary_csv(results))?;
    written.push(path);
    Ok(written)
}
