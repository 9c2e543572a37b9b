//! TOML experiment configuration.
//!
//! Every section has defaults, so an empty file is a valid (desk-scale)
//! experiment. Unknown keys are rejected, and [`ExperimentConfig::validate`]
//! runs before anything is trained.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{AggregatorKind, Behavior, Participation, TrainConfig};
use crate::task::ModelSpec;
use crate::weights::{parse_rational, PreprocessMode, Rational, TruncationQuery};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskSection,
    pub partition: PartitionSection,
    pub attack: AttackSection,
    pub training: TrainingSection,
    pub preprocess: PreprocessSection,
    pub aggregator: AggregatorSection,
    pub seeds: SeedSection,
    pub output: OutputSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Softmax,
    Mlp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSection {
    pub dim: usize,
    pub classes: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Distance of each class mean from the origin.
    pub separation: f64,
    pub model: ModelKind,
    pub hidden: usize,
    pub dropout: f64,
}

impl Default for TaskSection {
    fn default() -> Self {
        Self {
            dim: 20,
            classes: 10,
            n_train: 20_000,
            n_test: 2_000,
            separation: 3.0,
            model: ModelKind::Mlp,
            hidden: 32,
            dropout: 0.2,
        }
    }
}

impl TaskSection {
    pub fn model_spec(&self) -> ModelSpec {
        match self.model {
            ModelKind::Softmax => ModelSpec::SoftmaxRegression { dim: self.dim, classes: self.classes },
            ModelKind::Mlp => {
                ModelSpec::OneHiddenMlp { dim: self.dim, hidden: self.hidden, classes: self.classes, dropout: self.dropout }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionSection {
    pub clients: usize,
    pub mu: f64,
    pub sigma: f64,
}

impl Default for PartitionSection {
    fn default() -> Self {
        Self { clients: 100, mu: 1.5, sigma: 3.45 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    None,
    Negation,
    LabelShift,
}

impl AttackKind {
    pub fn behavior(&self) -> Behavior {
        match self {
            AttackKind::None => Behavior::Honest,
            AttackKind::Negation => Behavior::ModelNegation,
            AttackKind::LabelShift => Behavior::LabelShift,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackCount {
    Single,
    Fraction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSection {
    pub kinds: Vec<AttackKind>,
    pub counts: Vec<AttackCount>,
    /// Share of clients that turn Byzantine under `fraction`.
    pub fraction: f64,
    pub declared_single: u64,
    pub declared_fraction: u64,
}

impl Default for AttackSection {
    fn default() -> Self {
        Self {
            kinds: vec![AttackKind::None, AttackKind::Negation, AttackKind::LabelShift],
            counts: vec![AttackCount::Single, AttackCount::Fraction],
            fraction: 0.1,
            declared_single: 10_000_000,
            declared_fraction: 1_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClientsPerRound {
    Count(usize),
    Fraction(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub rounds: u64,
    /// An integer is a count, a float a fraction of all clients.
    pub clients_per_round: ClientsPerRound,
    pub eta: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub local_fraction: f64,
    pub honest_use_all_samples: bool,
    pub parallel: bool,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self {
            rounds: 100,
            clients_per_round: ClientsPerRound::Fraction(1.0),
            eta: 0.1,
            epochs: 1,
            batch_size: 10,
            local_fraction: 0.1,
            honest_use_all_samples: true,
            parallel: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessKind {
    Passthrough,
    Ignore,
    Truncate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSection {
    pub modes: Vec<PreprocessKind>,
    /// Exact decimals or fractions, e.g. "0.1" or "1/10".
    pub alpha: String,
    pub alpha_star: String,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        Self {
            modes: vec![PreprocessKind::Passthrough, PreprocessKind::Ignore, PreprocessKind::Truncate],
            alpha: "0.1".into(),
            alpha_star: "0.5".into(),
        }
    }
}

impl PreprocessSection {
    pub fn query(&self) -> Result<TruncationQuery> {
        let parse = |name: &str, text: &str| -> Result<Rational> {
            parse_rational(text).map_err(|e| Error::Config(format!("preprocess.{name}: {e}")))
        };
        TruncationQuery::new(parse("alpha", &self.alpha)?, parse("alpha_star", &self.alpha_star)?)
    }

    pub fn mode(&self, kind: PreprocessKind) -> Result<PreprocessMode> {
        Ok(match kind {
            PreprocessKind::Passthrough => PreprocessMode::Passthrough,
            PreprocessKind::Ignore => PreprocessMode::Ignore,
            PreprocessKind::Truncate => PreprocessMode::Truncate(self.query()?),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregatorName {
    Mean,
    Median,
    Trimmed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregatorSection {
    pub kinds: Vec<AggregatorName>,
    pub beta: f64,
}

impl Default for AggregatorSection {
    fn default() -> Self {
        Self { kinds: vec![AggregatorName::Mean, AggregatorName::Median, AggregatorName::Trimmed], beta: 0.1 }
    }
}

impl AggregatorSection {
    pub fn kind(&self, name: AggregatorName) -> AggregatorKind {
        match name {
            AggregatorName::Mean => AggregatorKind::WeightedMean,
            AggregatorName::Median => AggregatorKind::WeightedMedian,
            AggregatorName::Trimmed => AggregatorKind::TrimmedMean { beta: self.beta },
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSection {
    /// Drives data, partition, attacker choice and training.
    pub master: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("results") }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Training settings for one grid cell.
    pub fn train_config(&self, preprocess: PreprocessKind, aggregator: AggregatorName) -> Result<TrainConfig> {
        let t = &self.training;
        Ok(TrainConfig {
            rounds: t.rounds,
            participation: match t.clients_per_round {
                ClientsPerRound::Count(c) => Participation::Count(c),
                ClientsPerRound::Fraction(f) => Participation::Fraction(f),
            },
            eta: t.eta,
            epochs: t.epochs,
            batch_size: t.batch_size,
            local_fraction: t.local_fraction,
            preprocess: self.preprocess.mode(preprocess)?,
            aggregator: self.aggregator.kind(aggregator),
            honest_use_all_samples: t.honest_use_all_samples,
            master_seed: self.seeds.master,
            parallel: t.parallel,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let task = &self.task;
        if task.dim == 0 || task.classes < 2 {
            return bad(format!("task needs dim >= 1 and classes >= 2 (got {} and {})", task.dim, task.classes));
        }
        if task.n_test == 0 {
            return bad("task.n_test must be positive".into());
        }
        if !(task.separation.is_finite() && task.separation >= 0.0) {
            return bad(format!("task.separation {} must be finite and nonnegative", task.separation));
        }
        if task.model == ModelKind::Mlp && task.hidden == 0 {
            return bad("task.hidden must be positive for the mlp".into());
        }
        if !(0.0..1.0).contains(&task.dropout) {
            return bad(format!("task.dropout {} not in [0, 1)", task.dropout));
        }
        let p = &self.partition;
        if p.clients == 0 || (task.n_train as u64) < p.clients as u64 {
            return bad(format!("{} training samples cannot cover {} clients", task.n_train, p.clients));
        }
        if !(p.mu.is_finite() && p.sigma.is_finite() && p.sigma >= 0.0) {
            return bad(format!("bad partition parameters mu={} sigma={}", p.mu, p.sigma));
        }
        let a = &self.attack;
        if a.kinds.is_empty() {
            return bad("attack.kinds is empty".into());
        }
        if a.kinds.iter().any(|k| *k != AttackKind::None) && a.counts.is_empty() {
            return bad("attack.counts is empty".into());
        }
        if !(a.fraction > 0.0 && a.fraction < 1.0) {
            return bad(format!("attack.fraction {} not in (0, 1)", a.fraction));
        }
        if self.preprocess.modes.is_empty() || self.aggregator.kinds.is_empty() {
            return bad("the grid needs at least one preprocess mode and one aggregator".into());
        }
        self.preprocess.query().map_err(|e| Error::Config(format!("preprocess: {e}")))?;
        let train = self.train_config(self.preprocess.modes[0], self.aggregator.kinds[0])?;
        train.validate().map_err(|e| Error::Config(format!("training: {e}")))?;
        if !(0.0..0.5).contains(&self.aggregator.beta) {
            return bad(format!("aggregator.beta {} not in [0, 0.5)", self.aggregator.beta));
        }
        train.participation.resolve(p.clients).map_err(|e| Error::Config(format!("training: {e}")))?;
        Ok(())
    }
}
