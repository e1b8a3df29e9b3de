//! Datasets with a binary sensitive attribute and a binary label.

mod loader;
mod sampler;
mod stats;

pub use loader::{load_csv, CategoricalColumn, LabelSpec, Schema, SensitiveSpec};
pub use sampler::{BatchMode, StratifiedSampler};
pub use stats::{disparate_impact_level, stats, DatasetStats};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FairError, Result};

pub const DEFAULT_SPLIT_SEED: u64 = 42;
pub const DEFAULT_TRAIN_RATIO: f64 = 0.8;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    /// `N x F` feature matrix; the sensitive attribute may appear as a column.
    pub features: Array2<f64>,
    pub feature_names: Vec<String>,
    /// Columns that are z-scored by [`Standardizer`].
    pub continuous: Vec<usize>,
    pub standardized: bool,
    pub sensitive: Vec<u8>,
    pub labels: Vec<u8>,
    group_index: [Vec<usize>; 2],
    positive_index: [Vec<usize>; 2],
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Array2<f64>, sensitive: Vec<u8>, labels: Vec<u8>) -> Result<Self> {
        let names = (0..features.ncols()).map(|j| format!("x{j}")).collect();
        Self::with_columns(name, features, names, Vec::new(), sensitive, labels)
    }

    pub fn with_columns(
        name: impl Into<String>,
        features: Array2<f64>,
        feature_names: Vec<String>,
        continuous: Vec<usize>,
        sensitive: Vec<u8>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        let n = features.nrows();
        if sensitive.len() != n || labels.len() != n {
            return Err(FairError::dataset(format!(
                "{n} feature rows but {} sensitive values and {} labels",
                sensitive.len(),
                labels.len()
            )));
        }
        if feature_names.len() != features.ncols() {
            return Err(FairError::dataset("feature name count does not match width"));
        }
        if sensitive.iter().chain(&labels).any(|&v| v > 1) {
            return Err(FairError::dataset("sensitive values and labels must be 0 or 1"));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(FairError::dataset("non-finite feature value"));
        }
        let mut group_index = [Vec::new(), Vec::new()];
        let mut positive_index = [Vec::new(), Vec::new()];
        for i in 0..n {
            let s = sensitive[i] as usize;
            group_index[s].push(i);
            if labels[i] == 1 {
                positive_index[s].push(i);
            }
        }
        for (s, g) in group_index.iter().enumerate() {
            if g.is_empty() {
                return Err(FairError::dataset(format!("group s={s} is empty")));
            }
        }
        Ok(Self {
            name: name.into(),
            features,
            feature_names,
            continuous,
            standardized: false,
            sensitive,
            labels,
            group_index,
            positive_index,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.features.ncols()
    }

    /// Indices with `s_i = s`.
    pub fn group(&self, s: u8) -> &[usize] {
        &self.group_index[s as usize]
    }

    /// Indices with `s_i = s` and `y_i = 1`.
    pub fn positive_group(&self, s: u8) -> &[usize] {
        &self.positive_index[s as usize]
    }

    pub fn group_size(&self, s: u8) -> usize {
        self.group_index[s as usize].len()
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    pub fn features_for(&self, indices: &[usize]) -> Result<Array2<f64>> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(FairError::invalid(format!(
                "sample index {bad} out of range for {} rows",
                self.len()
            )));
        }
        Ok(self.features.select(Axis(0), indices))
    }

    /// A new dataset holding the given rows in the given order.
    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Result<Dataset> {
        let features = self.features_for(indices)?;
        let sensitive = indices.iter().map(|&i| self.sensitive[i]).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let mut out = Dataset::with_columns(
            name,
            features,
            self.feature_names.clone(),
            self.continuous.clone(),
            sensitive,
            labels,
        )?;
        out.standardized = self.standardized;
        Ok(out)
    }

    /// Seeded 80:20-style split: `floor(ratio * N)` rows for training, the rest for testing.
    pub fn split(&self, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        let (train, test) = split_indices(self.len(), ratio, seed)?;
        Ok((
            self.subset(&train, format!("{}-train", self.name))?,
            self.subset(&test, format!("{}-test", self.name))?,
        ))
    }

    /// Uniform subsample of `n` rows that keeps both groups nonempty.
    pub fn subsample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n >= self.len() {
            return Ok(self.clone());
        }
        let mut idx = self.all_indices();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        idx.truncate(n);
        idx.sort_unstable();
        self.subset(&idx, self.name.clone())
    }
}

/// Deterministic permutation split; returns `(train, test)` index lists.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(FairError::invalid(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (ratio * n as f64).floor() as usize;
    let test = perm.split_off(n_train);
    Ok((perm, test))
}

/// Per-column z-scoring fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub columns: Vec<usize>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &Dataset) -> Self {
        let n = train.len() as f64;
        let mut means = Vec::with_capacity(train.continuous.len());
        let mut scales = Vec::with_capacity(train.continuous.len());
        for &j in &train.continuous {
            let col = train.features.column(j);
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            means.push(mean);
            scales.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Self {
            columns: train.continuous.clone(),
            means,
            scales,
        }
    }

    /// Applies the transform once; datasets already marked standardized are left alone.
    pub fn apply(&self, data: &mut Dataset) {
        if data.standardized {
            return;
        }
        for ((&j, &m), &s) in self.columns.iter().zip(&self.means).zip(&self.scales) {
            data.features.column_mut(j).mapv_inplace(|v| (v - m) / s);
        }
        data.standardized = true;
    }
}
