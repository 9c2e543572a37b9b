//! Labelled datasets and the synthetic Gaussian-blob task.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::weights::WeightVector;

/// Row-major feature matrix plus one class label per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, dim: usize, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if dim == 0 || classes == 0 {
            return Err(Error::InvalidParameter("dataset needs dim >= 1 and classes >= 1".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::DimensionMismatch { expected: labels.len() * dim, actual: features.len() });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::InvalidParameter(format!("label {bad} is not below {classes}")));
        }
        Ok(Self { features, dim, labels, classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            features.extend_from_slice(self.row(r));
        }
        Dataset {
            features,
            dim: self.dim,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            classes: self.classes,
        }
    }

    /// Same features with every label `y` replaced by `(C - 1) - y`.
    pub fn with_shifted_labels(&self) -> Dataset {
        Dataset {
            labels: self.labels.iter().map(|&y| self.classes - 1 - y).collect(),
            ..self.clone()
        }
    }

    /// `feature_0..feature_{d-1},label`.
    pub fn to_csv(&self) -> String {
        let mut out = (0..self.dim).map(|j| format!("feature_{j},")).collect::<String>();
        out.push_str("label\n");
        for i in 0..self.len() {
            for x in self.row(i) {
                out.push_str(&format!("{x},"));
            }
            out.push_str(&format!("{}\n", self.labels[i]));
        }
        out
    }
}

/// Gaussian blobs: class `c` is centred on `separation * e_c` (a scaled
/// simplex) when `classes <= dim`, otherwise on seeded random unit
/// directions. Noise is unit isotropic and class priors are equal.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticTask {
    pub dim: usize,
    pub classes: usize,
    pub separation: f64,
    means: Vec<f64>,
}

impl SyntheticTask {
    pub fn new(dim: usize, classes: usize, separation: f64, seed: u64) -> Result<Self> {
        if dim == 0 || classes == 0 {
            return Err(Error::InvalidParameter("synthetic task needs dim >= 1 and classes >= 1".into()));
        }
        let mut means = vec![0.0; dim * classes];
        if classes <= dim {
            for c in 0..classes {
                means[c * dim + c] = separation;
            }
        } else {
            let mut rng = rng::stream(seed, &[tag::CLASS_MEANS]);
            for c in 0..classes {
                let dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                for j in 0..dim {
                    means[c * dim + j] = separation * dir[j] / norm;
                }
            }
        }
        Ok(Self { dim, classes, separation, means })
    }

    pub fn mean(&self, class: usize) -> &[f64] {
        &self.means[class * self.dim..(class + 1) * self.dim]
    }

    /// `n` rows drawn from the stream `(seed, stream_tag)`.
    pub fn sample(&self, n: usize, seed: u64, stream_tag: u64) -> Dataset {
        let mut rng = rng::stream(seed, &[stream_tag]);
        let mut features = Vec::with_capacity(n * self.dim);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let y = rng.random_range(0..self.classes);
            let mean = self.mean(y);
            features.extend(mean.iter().map(|m| m + rng.sample::<f64, _>(StandardNormal)));
            labels.push(y);
        }
        Dataset { features, dim: self.dim, labels, classes: self.classes }
    }

    pub fn train_set(&self, n: usize, seed: u64) -> Dataset {
        self.sample(n, seed, tag::TRAIN_DATA)
    }

    /// Same process as [`Self::train_set`], disjoint stream.
    pub fn test_set(&self, n: usize, seed: u64) -> Dataset {
        self.sample(n, seed, tag::TEST_DATA)
    }
}

pub const DEFAULT_SEPARATION: f64 = 3.0;

/// `n` rows of the default blob task in `d` dimensions with `classes` classes.
pub fn generate_synthetic_dataset(n: usize, dim: usize, classes: usize, seed: u64) -> Result<Dataset> {
    Ok(SyntheticTask::new(dim, classes, DEFAULT_SEPARATION, seed)?.train_set(n, seed))
}

/// Shuffle rows, then hand out contiguous runs of `sizes[k]` rows in the
/// order of `sizes.values()`.
pub fn partition_dataset(ds: &Dataset, sizes: &WeightVector, seed: u64) -> Result<Vec<Dataset>> {
    let total: u64 = sizes.values().iter().sum();
    if total != ds.len() as u64 {
        return Err(Error::SizeMismatch { sizes: total, rows: ds.len() });
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut rng::stream(seed, &[tag::SHUFFLE]));
    let mut shards = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for &n in sizes.values() {
        let end = start + n as usize;
        shards.push(ds.subset(&order[start..end]));
        start = end;
    }
    Ok(shards)
}
