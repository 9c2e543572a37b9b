//! Differentiable classifiers with hand-derived gradients.
//!
//! Parameters live in one flat [`ParamVector`] so the server can aggregate
//! them coordinate by coordinate without knowing the layer structure.

use std::ops::{Deref, Neg};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::task::data::Dataset;

#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Neg for &ParamVector {
    type Output = ParamVector;

    fn neg(self) -> ParamVector {
        ParamVector(self.0.iter().map(|x| -x).collect())
    }
}

/// Which hidden units survive, per row of a batch. Kept units are scaled by
/// `1 / (1 - rate)` so evaluation needs no rescaling.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMask {
    keep: Vec<bool>,
    hidden: usize,
    scale: f64,
}

impl DropoutMask {
    pub fn sample<R: Rng + ?Sized>(rows: usize, hidden: usize, rate: f64, rng: &mut R) -> Self {
        let keep = (0..rows * hidden).map(|_| rng.random::<f64>() >= rate).collect();
        Self { keep, hidden, scale: 1.0 / (1.0 - rate) }
    }

    pub fn rows(&self) -> usize {
        self.keep.len() / self.hidden.max(1)
    }

    fn row(&self, r: usize) -> &[bool] {
        &self.keep[r * self.hidden..(r + 1) * self.hidden]
    }
}

/// What the training loop needs from a model.
pub trait Model: Sync {
    fn param_count(&self) -> usize;

    fn initial_params(&self, rng: &mut dyn rand::RngCore) -> ParamVector;

    /// Mean loss over `rows` of `data`. When `grad` is given, the mean
    /// gradient is written into it (overwriting). `mask` row `r` belongs to
    /// `rows[r]`; `None` means evaluation mode.
    fn batch_loss_grad(
        &self,
        w: &[f64],
        data: &Dataset,
        rows: &[usize],
        mask: Option<&DropoutMask>,
        grad: Option<&mut [f64]>,
    ) -> f64;

    /// Draw a training-mode dropout mask, or `None` if the model has no dropout.
    fn sample_mask(&self, _rows: usize, _rng: &mut dyn rand::RngCore) -> Option<DropoutMask> {
        None
    }

    fn predict(&self, w: &[f64], x: &[f64]) -> usize;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelSpec {
    SoftmaxRegression { dim: usize, classes: usize },
    /// `dim -> hidden` ReLU layer with dropout, then a softmax layer.
    OneHiddenMlp { dim: usize, hidden: usize, classes: usize, dropout: f64 },
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        match *self {
            ModelSpec::SoftmaxRegression { dim, .. } | ModelSpec::OneHiddenMlp { dim, .. } => dim,
        }
    }

    pub fn classes(&self) -> usize {
        match *self {
            ModelSpec::SoftmaxRegression { classes, .. } | ModelSpec::OneHiddenMlp { classes, .. } => classes,
        }
    }
}

fn log_softmax_loss(logits: &mut [f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    let lse = max + sum.ln();
    let loss = lse - logits[label];
    // Leave the softmax probabilities behind for the backward pass.
    for z in logits.iter_mut() {
        *z = (*z - lse).exp();
    }
    loss
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl Model for ModelSpec {
    fn param_count(&self) -> usize {
        match *self {
            ModelSpec::SoftmaxRegression { dim, classes } => classes * dim + classes,
            ModelSpec::OneHiddenMlp { dim, hidden, classes, .. } => hidden * dim + hidden + classes * hidden + classes,
        }
    }

    /// Softmax regression starts at zero. The MLP draws He-normal input
    /// weights and zeroes everything else, so its initial output is uniform.
    fn initial_params(&self, rng: &mut dyn rand::RngCore) -> ParamVector {
        let mut w = ParamVector::zeros(self.param_count());
        if let ModelSpec::OneHiddenMlp { dim, hidden, .. } = *self {
            let std = (2.0 / dim as f64).sqrt();
            for x in &mut w.0[..hidden * dim] {
                *x = std * rng.sample::<f64, _>(StandardNormal);
            }
        }
        w
    }

    fn batch_loss_grad(
        &self,
        w: &[f64],
        data: &Dataset,
        rows: &[usize],
        mask: Option<&DropoutMask>,
        mut grad: Option<&mut [f64]>,
    ) -> f64 {
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        if rows.is_empty() {
            return 0.0;
        }
        let inv_n = 1.0 / rows.len() as f64;
        let mut total = 0.0;
        match *self {
            ModelSpec::SoftmaxRegression { dim, classes } => {
                let (weights, bias) = w.split_at(classes * dim);
                let mut probs = vec![0.0; classes];
                for &r in rows {
                    let x = data.row(r);
                    let y = data.label(r);
                    for c in 0..classes {
                        probs[c] = bias[c] + dot(&weights[c * dim..(c + 1) * dim], x);
                    }
                    total += log_softmax_loss(&mut probs, y);
                    if let Some(g) = grad.as_deref_mut() {
                        probs[y] -= 1.0;
                        let (gw, gb) = g.split_at_mut(classes * dim);
                        for c in 0..classes {
                            let delta = probs[c] * inv_n;
                            axpy(&mut gw[c * dim..(c + 1) * dim], delta, x);
                            gb[c] += delta;
                        }
                    }
                }
            }
            ModelSpec::OneHiddenMlp { dim, hidden, classes, .. } => {
                let (w1, rest) = w.split_at(hidden * dim);
                let (b1, rest) = rest.split_at(hidden);
                let (w2, b2) = rest.split_at(classes * hidden);
                let mut pre = vec![0.0; hidden];
                let mut act = vec![0.0; hidden];
                let mut probs = vec![0.0; classes];
                let mut back = vec![0.0; hidden];
                for (i, &r) in rows.iter().enumerate() {
                    let x = data.row(r);
                    let y = data.label(r);
                    let keep = mask.map(|m| (m.row(i), m.scale));
                    for h in 0..hidden {
                        pre[h] = b1[h] + dot(&w1[h * dim..(h + 1) * dim], x);
                        act[h] = match keep {
                            Some((k, s)) if pre[h] > 0.0 => if k[h] { pre[h] * s } else { 0.0 },
                            None if pre[h] > 0.0 => pre[h],
                            _ => 0.0,
                        };
                    }
                    for c in 0..classes {
                        probs[c] = b2[c] + dot(&w2[c * hidden..(c + 1) * hidden], &act);
                    }
                    total += log_softmax_loss(&mut probs, y);
                    if let Some(g) = grad.as_deref_mut() {
                        probs[y] -= 1.0;
                        back.fill(0.0);
                        let (g1, grest) = g.split_at_mut(hidden * dim);
                        let (gb1, grest) = grest.split_at_mut(hidden);
                        let (g2, gb2) = grest.split_at_mut(classes * hidden);
                        for c in 0..classes {
                            let delta = probs[c] * inv_n;
                            axpy(&mut g2[c * hidden..(c + 1) * hidden], delta, &act);
                            gb2[c] += delta;
                            axpy(&mut back, probs[c], &w2[c * hidden..(c + 1) * hidden]);
                        }
                        for h in 0..hidden {
                            if pre[h] <= 0.0 {
                                continue;
                            }
                            let through = match keep {
                                Some((k, s)) => if k[h] { s } else { 0.0 },
                                None => 1.0,
                            };
                            let delta = back[h] * through * inv_n;
                            if delta != 0.0 {
                                axpy(&mut g1[h * dim..(h + 1) * dim], delta, x);
                                gb1[h] += delta;
                            }
                        }
                    }
                }
            }
        }
        total * inv_n
    }

    fn sample_mask(&self, rows: usize, rng: &mut dyn rand::RngCore) -> Option<DropoutMask> {
        match *self {
            ModelSpec::OneHiddenMlp { hidden, dropout, .. } if dropout > 0.0 => {
                Some(DropoutMask::sample(rows, hidden, dropout, rng))
            }
            _ => None,
        }
    }

    fn predict(&self, w: &[f64], x: &[f64]) -> usize {
        match *self {
            ModelSpec::SoftmaxRegression { dim, classes } => {
                let (weights, bias) = w.split_at(classes * dim);
                let logits: Vec<f64> = (0..classes).map(|c| bias[c] + dot(&weights[c * dim..(c + 1) * dim], x)).collect();
                argmax(&logits)
            }
            ModelSpec::OneHiddenMlp { dim, hidden, classes, .. } => {
                let (w1, rest) = w.split_at(hidden * dim);
                let (b1, rest) = rest.split_at(hidden);
                let (w2, b2) = rest.split_at(classes * hidden);
                let act: Vec<f64> = (0..hidden).map(|h| (b1[h] + dot(&w1[h * dim..(h + 1) * dim], x)).max(0.0)).collect();
                let logits: Vec<f64> = (0..classes).map(|c| b2[c] + dot(&w2[c * hidden..(c + 1) * hidden], &act)).collect();
                argmax(&logits)
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn all_rows(data: &Dataset) -> Vec<usize> {
    (0..data.len()).collect()
}

/// Mean cross-entropy over the whole batch.
pub fn loss<M: Model + ?Sized>(model: &M, w: &ParamVector, batch: &Dataset, mask: Option<&DropoutMask>) -> f64 {
    model.batch_loss_grad(w, batch, &all_rows(batch), mask, None)
}

pub fn gradient<M: Model + ?Sized>(model: &M, w: &ParamVector, batch: &Dataset, mask: Option<&DropoutMask>) -> ParamVector {
    let mut g = ParamVector::zeros(model.param_count());
    model.batch_loss_grad(w, batch, &all_rows(batch), mask, Some(&mut g.0));
    g
}

/// Full-shard mean loss in evaluation mode.
pub fn client_objective<M: Model + ?Sized>(model: &M, w: &ParamVector, client_data: &Dataset) -> f64 {
    loss(model, w, client_data, None)
}

/// `(accuracy, mean loss)` in evaluation mode.
pub fn evaluate<M: Model + ?Sized>(model: &M, w: &ParamVector, data: &Dataset) -> (f64, f64) {
    if data.is_empty() {
        return (0.0, 0.0);
    }
    let correct = (0..data.len()).filter(|&i| model.predict(w, data.row(i)) == data.label(i)).count();
    (correct as f64 / data.len() as f64, client_objective(model, w, data))
}
