use crate::error::{Error, Result};

/// Empirical output frequencies `q̂[y] = #{j : Y_j = y} / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    counts: Vec<u64>,
    n: u64,
    qhat: Vec<f64>,
}

impl Histogram {
    pub fn from_samples(samples: &[usize], m: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("privatized samples"));
        }
        let mut counts = vec![0u64; m];
        for &y in samples {
            *counts
                .get_mut(y)
                .ok_or(Error::IndexOutOfRange { index: y, size: m })? += 1;
        }
        Self::from_counts(counts)
    }

    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::EmptyInput("histogram counts"));
        }
        let qhat = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Ok(Self { counts, n, qhat })
    }

    /// Adds the counts of another shard over the same output universe.
    pub fn merge(&self, other: &Histogram) -> Result<Self> {
        if self.m() != other.m() {
            return Err(Error::LengthMismatch {
                expected: self.m(),
                actual: other.m(),
            });
        }
        Self::from_counts(
            self.counts
                .iter()
                .zip(&other.counts)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn qhat(&self) -> &[f64] {
        &self.qhat
    }

    pub fn m(&self) -> usize {
        self.counts.len()
    }
}
