//! Certifying the weight bound from an IID sample of truncated sizes.
//!
//! When the server only sees `k` of the K declared sizes, it can still check
//! `mwp(trunc(N, U), alpha) <= alpha*` with confidence `1 - delta` by bounding
//! the top-alpha mean from above and the overall mean from below, each with a
//! Hoeffding term. The check is one-sided: a failed certificate says nothing.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::weights::{mwp, rational_to_f64, truncate, Rational, WeightVector};

/// Which logarithm term goes into eps2 and eps3.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LogTerm {
    /// `ln(3/delta)`: three Hoeffding bounds at `delta/3` each, combined by a
    /// union bound.
    #[default]
    UnionBound,
    /// `ln(ln(3/delta))`, as typeset in the published statement. Smaller and
    /// therefore less conservative; kept for comparison only.
    DoubleLog,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleCheckParams {
    pub k: usize,
    pub alpha: Rational,
    pub alpha_star: Rational,
    pub delta: f64,
    /// Truncation bound applied before sampling.
    pub cap: u64,
    pub log_term: LogTerm,
}

impl SampleCheckParams {
    pub fn new(k: usize, alpha: Rational, alpha_star: Rational, delta: f64, cap: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("sample size k must be at least 1".into()));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta={delta} is not in (0, 1)")));
        }
        let a = rational_to_f64(&alpha);
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidProportion(format!("alpha={alpha} is not in [0, 1]")));
        }
        let s = rational_to_f64(&alpha_star);
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidProportion(format!("alpha*={alpha_star} is not in (0, 1)")));
        }
        Ok(Self { k, alpha, alpha_star, delta, cap, log_term: LogTerm::default() })
    }

    pub fn with_log_term(mut self, log_term: LogTerm) -> Self {
        self.log_term = log_term;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonTriple {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
}

pub fn epsilons(p: &SampleCheckParams) -> Result<EpsilonTriple> {
    let k = p.k as f64;
    let alpha = rational_to_f64(&p.alpha);
    let cap = p.cap as f64;
    let ln = (3.0 / p.delta).ln();
    let eps1 = (ln / (2.0 * k)).sqrt();
    if alpha <= eps1 {
        return Err(Error::AlphaTooSmall { alpha, eps1 });
    }
    let log_term = match p.log_term {
        LogTerm::UnionBound => ln,
        LogTerm::DoubleLog => ln.ln(),
    };
    let eps2 = cap * (log_term / (2.0 * (k * (alpha - eps1) + 1.0))).sqrt();
    let eps3 = cap * (log_term / (2.0 * k)).sqrt();
    Ok(EpsilonTriple { eps1, eps2, eps3 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleCheckResult {
    pub certified: bool,
    /// Left-hand side of the certificate inequality; `+inf` when the lower
    /// bound on the mean is not positive.
    pub lhs: f64,
    pub epsilons: EpsilonTriple,
    pub top_mean: f64,
    pub sample_mean: f64,
}

impl SampleCheckResult {
    pub const CSV_HEADER: &'static str = "certified,lhs,eps1,eps2,eps3,top_mean,sample_mean";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.certified,
            self.lhs,
            self.epsilons.eps1,
            self.epsilons.eps2,
            self.epsilons.eps3,
            self.top_mean,
            self.sample_mean
        )
    }
}

/// 1-based index of the first order statistic in the trimmed top window,
/// `ceil((1 - (alpha - eps1)) k)`.
pub fn window_start(k: usize, alpha: f64, eps1: f64) -> usize {
    let start = ((1.0 - (alpha - eps1)) * k as f64).ceil();
    (start as usize).clamp(1, k)
}

pub fn certify_sample(sample: &[u64], p: &SampleCheckParams) -> Result<SampleCheckResult> {
    if sample.len() != p.k {
        return Err(Error::SampleSizeMismatch { expected: p.k, actual: sample.len() });
    }
    if let Some(&value) = sample.iter().find(|&&x| x > p.cap) {
        return Err(Error::ValueExceedsCap { value, cap: p.cap });
    }
    let eps = epsilons(p)?;
    let alpha = rational_to_f64(&p.alpha);
    let alpha_star = rational_to_f64(&p.alpha_star);

    let mut sorted = sample.to_vec();
    sorted.sort_unstable();
    let start = window_start(p.k, alpha, eps.eps1);
    let window = &sorted[start - 1..];
    let top_mean = window.iter().map(|&x| x as f64).sum::<f64>() / window.len() as f64;
    let sample_mean = sorted.iter().map(|&x| x as f64).sum::<f64>() / p.k as f64;

    let lower = sample_mean - eps.eps3;
    let (lhs, certified) = if lower > 0.0 {
        let lhs = alpha * (top_mean + eps.eps2) / lower;
        (lhs, lhs <= alpha_star)
    } else {
        (f64::INFINITY, false)
    };
    Ok(SampleCheckResult { certified, lhs, epsilons: eps, top_mean, sample_mean })
}

/// `k` draws, uniform with replacement over clients, from `trunc(population, cap)`.
pub fn draw_sample<R: Rng + ?Sized>(population: &WeightVector, cap: u64, k: usize, rng: &mut R) -> Vec<u64> {
    let values = population.values();
    (0..k).map(|_| values[rng.random_range(0..values.len())].min(cap)).collect()
}

/// Draw `k` values with the stream keyed by `seed` and certify them.
pub fn certify_population(population: &WeightVector, p: &SampleCheckParams, seed: u64) -> Result<SampleCheckResult> {
    let mut rng = rng::stream(seed, &[tag::CERTIFY]);
    certify_sample(&draw_sample(population, p.cap, p.k, &mut rng), p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ValidationSummary {
    pub trials: usize,
    pub certified: usize,
    /// Trials certified while the true condition fails.
    pub false_certified: usize,
    /// Whether `mwp(trunc(population, U), alpha) <= alpha*` actually holds.
    pub condition_holds: bool,
}

impl ValidationSummary {
    pub fn false_cert_rate(&self) -> f64 {
        self.false_certified as f64 / self.trials as f64
    }
}

/// Empirical soundness check: how often does the certificate fire when the
/// bound is in fact violated? Trial `i` draws from the stream `(seed, i)`, so
/// the result does not depend on how trials are scheduled.
pub fn monte_carlo_validate(
    population: &WeightVector,
    p: &SampleCheckParams,
    trials: usize,
    seed: u64,
) -> Result<ValidationSummary> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if p.cap == 0 {
        return Err(Error::InvalidParameter("truncation bound must be at least 1".into()));
    }
    epsilons(p)?;
    let truth = mwp(&truncate(population, p.cap)?, &p.alpha)?;
    let condition_holds = truth <= p.alpha_star;

    let certified = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, &[tag::MONTE_CARLO, i as u64]);
            let sample = draw_sample(population, p.cap, p.k, &mut rng);
            certify_sample(&sample, p).map(|r| usize::from(r.certified))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let false_certified = if condition_holds { 0 } else { certified };
    Ok(ValidationSummary { trials, certified, false_certified, condition_holds })
}
