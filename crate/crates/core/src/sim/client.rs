use std::fmt;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::sim::engine::TrainConfig;
use crate::task::{Dataset, Model, ParamVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Behavior {
    Honest,
    /// Always send back the negated server model.
    ModelNegation,
    /// Train normally on labels mapped `y -> (C - 1) - y`.
    LabelShift,
}

impl Behavior {
    pub fn is_byzantine(&self) -> bool {
        !matches!(self, Behavior::Honest)
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Behavior::Honest => "honest",
            Behavior::ModelNegation => "negation",
            Behavior::LabelShift => "label_shift",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClientSpec {
    pub id: u64,
    pub data: Dataset,
    /// What the client tells the server; only honest clients are bound to
    /// report `data.len()`.
    pub declared_size: u64,
    pub behavior: Behavior,
}

impl ClientSpec {
    pub fn honest(id: u64, data: Dataset) -> Self {
        Self { id, declared_size: data.len() as u64, data, behavior: Behavior::Honest }
    }

    pub fn byzantine(id: u64, data: Dataset, declared_size: u64, behavior: Behavior) -> Self {
        Self { id, data, declared_size, behavior }
    }

    pub fn validate(&self) -> Result<()> {
        if self.behavior == Behavior::Honest && self.declared_size != self.data.len() as u64 {
            return Err(Error::InvalidClient {
                id: self.id,
                reason: format!("honest client declares {} but holds {} samples", self.declared_size, self.data.len()),
            });
        }
        Ok(())
    }
}

/// Model-replacing attacks. `None` for behaviors that train.
pub fn byzantine_update(behavior: Behavior, w_server: &ParamVector) -> Option<ParamVector> {
    match behavior {
        Behavior::ModelNegation => Some(-w_server),
        Behavior::Honest | Behavior::LabelShift => None,
    }
}

/// Rows the client may train on. With `honest_use_all_samples` off, a client
/// keeps a fixed random subset of `assigned_weight` rows for the whole run.
fn usable_rows(client: &ClientSpec, assigned_weight: u64, cfg: &TrainConfig) -> Vec<usize> {
    let n = client.data.len();
    let mut rows: Vec<usize> = (0..n).collect();
    if !cfg.honest_use_all_samples && (assigned_weight as usize) < n {
        rows.shuffle(&mut rng::stream(cfg.master_seed, &[tag::CLIENT_SUBSET, client.id]));
        rows.truncate(assigned_weight.max(1) as usize);
        rows.sort_unstable();
    }
    rows
}

/// Local mini-batch SGD from the server model: each round the client picks
/// `ceil(local_fraction * usable)` rows and runs `epochs` passes over them in
/// batches of `batch_size`, reshuffling every pass. All randomness comes from
/// the `(master_seed, round, client id)` stream.
pub fn client_update<M: Model + ?Sized>(
    model: &M,
    w: &ParamVector,
    client: &ClientSpec,
    assigned_weight: u64,
    cfg: &TrainConfig,
    round: u64,
) -> Result<ParamVector> {
    if client.data.is_empty() {
        return Err(Error::EmptyClientData(client.id));
    }
    let shifted;
    let data = if client.behavior == Behavior::LabelShift {
        shifted = client.data.with_shifted_labels();
        &shifted
    } else {
        &client.data
    };
    let mut rng = rng::stream(cfg.master_seed, &[tag::CLIENT_ROUND, round, client.id]);
    let mut rows = usable_rows(client, assigned_weight, cfg);
    if cfg.local_fraction < 1.0 {
        let take = ((cfg.local_fraction * rows.len() as f64).ceil() as usize).clamp(1, rows.len());
        let (picked, _) = rows.partial_shuffle(&mut rng, take);
        rows = picked.to_vec();
    }

    let mut params = w.clone();
    let mut grad = vec![0.0; model.param_count()];
    for _ in 0..cfg.epochs {
        rows.shuffle(&mut rng);
        for batch in rows.chunks(cfg.batch_size) {
            let mask = model.sample_mask(batch.len(), &mut rng);
            model.batch_loss_grad(&params, data, batch, mask.as_ref(), Some(&mut grad));
            for (p, g) in params.as_mut_slice().iter_mut().zip(&grad) {
                *p -= cfg.eta * g;
            }
        }
    }
    Ok(params)
}
