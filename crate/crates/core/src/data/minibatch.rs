use super::Dataset;
use crate::error::{Error, Result};
use crate::prng::RngStream;

/// Distinct row indices drawn uniformly without replacement.
#[derive(Clone, Debug, PartialEq)]
pub struct Minibatch {
    pub indices: Vec<usize>,
    pub fraction: f64,
}

pub fn batch_size(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "batch fraction must lie in (0, 1], got {fraction}"
        )));
    }
    Ok(((fraction * n as f64).round() as usize).clamp(1, n.max(1)))
}

/// Reusable sampler: a partial Fisher-Yates shuffle over a persistent
/// permutation, so each call costs O(batch) draws and no allocation.
#[derive(Clone, Debug)]
pub struct MinibatchSampler {
    perm: Vec<usize>,
    count: usize,
    fraction: f64,
}

impl MinibatchSampler {
    pub fn new(n: usize, fraction: f64) -> Result<Self> {
        let count = batch_size(n, fraction)?;
        Ok(Self {
            perm: (0..n).collect(),
            count,
            fraction,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.count
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    /// Full-data batches are returned in index order without consuming draws.
    pub fn sample(&mut self, stream: &mut RngStream) -> &[usize] {
        let n = self.perm.len();
        if self.count < n {
            for k in 0..self.count {
                let j = k + stream.next_below((n - k) as u64) as usize;
                self.perm.swap(k, j);
            }
        } else {
            self.perm.sort_unstable();
        }
        &self.perm[..self.count]
    }
}

pub fn sample_minibatch(dataset: &Dataset, fraction: f64, stream: &mut RngStream) -> Result<Minibatch> {
    let mut sampler = MinibatchSampler::new(dataset.len(), fraction)?;
    Ok(Minibatch {
        indices: sampler.sample(stream).to_vec(),
        fraction,
    })
}
