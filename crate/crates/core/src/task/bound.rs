//! How far truncating the declared sizes moves the weighted objective.

use crate::error::{Error, Result};
use crate::task::data::Dataset;
use crate::task::model::{client_objective, Model, ParamVector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapBound {
    /// `|sum(n_dot_i F_i)/n_dot - sum(n_tilde_i F_i)/n_tilde|`
    pub lhs: f64,
    /// `|sum_{n_dot_i > U} (n_dot_i/n_dot - 1/K) F_i + (1/n_dot - 1/n_tilde) sum_{n_dot_i <= U} L(Z_i)|`
    pub rhs: f64,
}

impl GapBound {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

/// Compare the objective weighted by the declared sizes with the objective
/// weighted by the sizes truncated at `cap`, and evaluate the bound on that
/// gap. `declared[i]` is client `i`'s declaration for `shards[i]`; it may
/// differ from the shard's true size. `L(Z_i)` is the summed (not averaged)
/// loss over the shard.
pub fn objective_gap_bound<M: Model + ?Sized>(
    model: &M,
    w: &ParamVector,
    shards: &[Dataset],
    declared: &[u64],
    cap: u64,
) -> Result<GapBound> {
    if shards.len() != declared.len() {
        return Err(Error::DimensionMismatch { expected: shards.len(), actual: declared.len() });
    }
    if shards.is_empty() {
        return Err(Error::EmptyWeights);
    }
    if cap == 0 || declared.iter().all(|&n| n == 0) {
        return Err(Error::ZeroTotalWeight);
    }
    let k = shards.len() as f64;
    let objectives: Vec<f64> = shards
        .iter()
        .map(|s| if s.is_empty() { 0.0 } else { client_objective(model, w, s) })
        .collect();
    let n_dot: f64 = declared.iter().map(|&n| n as f64).sum();
    let n_tilde: f64 = declared.iter().map(|&n| n.min(cap) as f64).sum();

    let declared_objective: f64 = declared.iter().zip(&objectives).map(|(&n, f)| n as f64 * f).sum::<f64>() / n_dot;
    let truncated_objective: f64 =
        declared.iter().zip(&objectives).map(|(&n, f)| n.min(cap) as f64 * f).sum::<f64>() / n_tilde;

    let mut above = 0.0;
    let mut below_loss = 0.0;
    for ((&n, f), shard) in declared.iter().zip(&objectives).zip(shards) {
        if n > cap {
            above += (n as f64 / n_dot - 1.0 / k) * f;
        } else {
            below_loss += shard.len() as f64 * f;
        }
    }
    Ok(GapBound {
        lhs: (declared_objective - truncated_objective).abs(),
        rhs: (above + (1.0 / n_dot - 1.0 / n_tilde) * below_loss).abs(),
    })
}
