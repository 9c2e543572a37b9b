//! Server-side aggregation rules over client parameter vectors.
//!
//! All three rules take a nonnegative weight per update. The robust rules are
//! weighted generalisations of the coordinatewise median and trimmed mean and
//! coincide with the classic estimators when every weight is equal.

use std::fmt;

use crate::error::{Error, Result};
use crate::task::ParamVector;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AggregatorKind {
    WeightedMean,
    WeightedMedian,
    /// Trim `beta` of the weight mass from each tail.
    TrimmedMean { beta: f64 },
}

impl AggregatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            AggregatorKind::WeightedMean => "mean",
            AggregatorKind::WeightedMedian => "median",
            AggregatorKind::TrimmedMean { .. } => "trimmed",
        }
    }

    pub fn aggregate(&self, updates: &[ParamVector], weights: &[f64]) -> Result<ParamVector> {
        match *self {
            AggregatorKind::WeightedMean => aggregate_weighted_mean(updates, weights),
            AggregatorKind::WeightedMedian => aggregate_weighted_median(updates, weights),
            AggregatorKind::TrimmedMean { beta } => aggregate_trimmed_mean(updates, weights, beta),
        }
    }
}

impl fmt::Display for AggregatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn validate(updates: &[ParamVector], weights: &[f64]) -> Result<(usize, f64)> {
    if updates.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: updates.len(), actual: weights.len() });
    }
    let first = updates.first().ok_or(Error::WeightSumZero)?;
    let dim = first.len();
    if let Some(bad) = updates.iter().find(|u| u.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, actual: bad.len() });
    }
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidParameter("aggregation weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::WeightSumZero);
    }
    Ok((dim, total))
}

/// Per coordinate, `(value, weight)` pairs sorted by value.
fn sorted_column(updates: &[ParamVector], weights: &[f64], j: usize, out: &mut Vec<(f64, f64)>) {
    out.clear();
    out.extend(updates.iter().zip(weights).map(|(u, &w)| (u[j], w)));
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
}

pub fn aggregate_weighted_mean(updates: &[ParamVector], weights: &[f64]) -> Result<ParamVector> {
    let (dim, total) = validate(updates, weights)?;
    let mut acc = vec![0.0; dim];
    for (u, &w) in updates.iter().zip(weights) {
        for (a, x) in acc.iter_mut().zip(u.iter()) {
            *a += w * x;
        }
    }
    Ok(ParamVector::new(acc.into_iter().map(|a| a / total).collect()))
}

/// Lower weighted median: the smallest value whose cumulative weight reaches
/// half the total.
pub fn aggregate_weighted_median(updates: &[ParamVector], weights: &[f64]) -> Result<ParamVector> {
    let (dim, total) = validate(updates, weights)?;
    let mut column = Vec::with_capacity(updates.len());
    let mut out = Vec::with_capacity(dim);
    for j in 0..dim {
        sorted_column(updates, weights, j, &mut column);
        let mut cumulative = 0.0;
        let mut median = column[column.len() - 1].0;
        for &(v, w) in &column {
            cumulative += w;
            if 2.0 * cumulative >= total {
                median = v;
                break;
            }
        }
        out.push(median);
    }
    Ok(ParamVector::new(out))
}

/// Remove `beta * W` of weight mass from each end of every coordinate,
/// splitting the boundary update's weight, and average what survives.
pub fn aggregate_trimmed_mean(updates: &[ParamVector], weights: &[f64], beta: f64) -> Result<ParamVector> {
    if !(0.0..0.5).contains(&beta) {
        return Err(Error::AllMassTrimmed(beta));
    }
    let (dim, total) = validate(updates, weights)?;
    let lo = beta * total;
    let hi = total - lo;
    let mut column = Vec::with_capacity(updates.len());
    let mut out = Vec::with_capacity(dim);
    for j in 0..dim {
        sorted_column(updates, weights, j, &mut column);
        let mut start = 0.0;
        let mut acc = 0.0;
        for &(v, w) in &column {
            let end = start + w;
            let kept = end.min(hi) - start.max(lo);
            if kept > 0.0 {
                acc += v * kept;
            }
            start = end;
        }
        out.push(acc / (hi - lo));
    }
    Ok(ParamVector::new(out))
}
