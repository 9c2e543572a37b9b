use rand_distr::{Distribution, LogNormal};

use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::weights::WeightVector;

/// Lognormal client sizes: `clients` draws of LogNormal(mu, sigma), scaled to
/// integers that sum to `total`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionSpec {
    pub total: u64,
    pub clients: usize,
    pub mu: f64,
    pub sigma: f64,
    pub seed: u64,
}

/// Every client gets one sample up front; the remaining `total - K` are split
/// in proportion to the lognormal draws with largest-remainder rounding
/// (ties go to the lower index). Returned sorted ascending.
pub fn generate_partition(spec: &PartitionSpec) -> Result<WeightVector> {
    let k = spec.clients;
    if k == 0 {
        return Err(Error::InvalidParameter("partition needs at least one client".into()));
    }
    if spec.total < k as u64 {
        return Err(Error::InfeasibleTotal { total: spec.total, clients: k });
    }
    if spec.sigma < 0.0 || !spec.mu.is_finite() || !spec.sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("bad lognormal parameters mu={} sigma={}", spec.mu, spec.sigma)));
    }
    let mut rng = rng::stream(spec.seed, &[tag::PARTITION]);
    let draws: Vec<f64> = if spec.sigma == 0.0 {
        vec![spec.mu.exp(); k]
    } else {
        let dist = LogNormal::new(spec.mu, spec.sigma)
            .map_err(|e| Error::InvalidParameter(format!("lognormal: {e}")))?;
        (0..k).map(|_| dist.sample(&mut rng)).collect()
    };
    let mass: f64 = draws.iter().sum();
    let spare = spec.total - k as u64;

    let quotas: Vec<f64> = draws.iter().map(|d| spare as f64 * d / mass).collect();
    let mut sizes: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = sizes.iter().sum();
    // Rounding in the quotas can overshoot by a unit or two; take it back
    // from the largest shares.
    let mut order: Vec<usize> = (0..k).collect();
    if assigned > spare {
        order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
        for &i in order.iter().cycle().take((assigned - spare) as usize) {
            sizes[i] -= 1;
        }
    } else {
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - quotas[a].floor();
            let rb = quotas[b] - quotas[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().cycle().take((spare - assigned) as usize) {
            sizes[i] += 1;
        }
    }
    WeightVector::new(sizes.into_iter().map(|s| s + 1).collect())
}
