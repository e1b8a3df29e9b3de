use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{FairError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum BatchMode {
    #[default]
    Full,
    /// Fixed per-group counts in every minibatch.
    Stratified { n0: usize, n1: usize },
}

/// Minibatches holding exactly `n0` indices from group 0 and `n1` from
/// group 1, each drawn uniformly without replacement.
///
/// Each group walks through its own seeded permutation in chunks and is
/// reshuffled when the next chunk would run past its end, so every batch is
/// a uniformly random subset of each group. Group rates estimated from such
/// batches are unbiased for the full-data rates.
#[derive(Debug, Clone)]
pub struct StratifiedSampler {
    groups: [Vec<usize>; 2],
    counts: [usize; 2],
    cursors: [usize; 2],
    rng: ChaCha8Rng,
}

impl StratifiedSampler {
    pub fn new(data: &Dataset, n0: usize, n1: usize, seed: u64) -> Result<Self> {
        for (s, n) in [(0u8, n0), (1u8, n1)] {
            if n == 0 || n > data.group_size(s) {
                return Err(FairError::invalid(format!(
                    "batch count {n} for group s={s} must lie in [1, {}]",
                    data.group_size(s)
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut groups = [data.group(0).to_vec(), data.group(1).to_vec()];
        for g in &mut groups {
            g.shuffle(&mut rng);
        }
        Ok(Self {
            groups,
            counts: [n0, n1],
            cursors: [0, 0],
            rng,
        })
    }

    /// Iterations that make up one pass over the data.
    pub fn batches_per_epoch(&self) -> usize {
        let n = self.groups[0].len() + self.groups[1].len();
        n.div_ceil(self.counts[0] + self.counts[1])
    }

    pub fn next_batch(&mut self) -> Vec<usize> {
        let mut batch = Vec::with_capacity(self.counts[0] + self.counts[1]);
        for s in 0..2 {
            let k = self.counts[s];
            if self.cursors[s] + k > self.groups[s].len() {
                self.groups[s].shuffle(&mut self.rng);
                self.cursors[s] = 0;
            }
            let c = self.cursors[s];
            batch.extend_from_slice(&self.groups[s][c..c + k]);
            self.cursors[s] += k;
        }
        batch
    }
}

impl Iterator for StratifiedSampler {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        Some(self.next_batch())
    }
}
