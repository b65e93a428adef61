use rand::{Rng, RngCore};

use super::{check_epsilon, check_input, check_k, FrequencyOracle};
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::recovery::Decoder;
use crate::rng::seeded_rng;

/// k-ary randomized response: report the true symbol with probability
/// `e^ε/(e^ε + k − 1)`, otherwise a uniformly random other symbol.
#[derive(Debug, Clone)]
pub struct RandomizedResponse {
    k: usize,
    epsilon: f64,
}

impl RandomizedResponse {
    pub fn new(k: usize, epsilon: f64) -> Result<Self> {
        check_k(k)?;
        check_epsilon(epsilon)?;
        Ok(Self { k, epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn truthful_prob(&self) -> f64 {
        let e = self.epsilon.exp();
        e / (e + self.k as f64 - 1.0)
    }

    pub fn other_prob(&self) -> f64 {
        1.0 / (self.epsilon.exp() + self.k as f64 - 1.0)
    }

    pub fn channel_prob(&self, y: usize, x: usize) -> Result<f64> {
        check_input(x, self.k)?;
        check_input(y, self.k)?;
        Ok(if x == y {
            self.truthful_prob()
        } else {
            self.other_prob()
        })
    }

    pub fn privatize(&self, x: usize, seed: u64) -> Result<usize> {
        check_input(x, self.k)?;
        Ok(self.privatize_with(x, &mut seeded_rng(seed)))
    }

    pub fn privatize_with<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        if self.k == 1 || rng.random::<f64>() < self.truthful_prob() {
            return x;
        }
        let other = rng.random_range(0..self.k - 1);
        if other >= x {
            other + 1
        } else {
            other
        }
    }

    /// Inverts the channel coordinatewise:
    /// `p̂_i = (q̂_i − b)/(a − b)` with `a`, `b` the truthful and other
    /// report probabilities.
    pub fn unbiased_frequencies(&self, counts: &[u64]) -> Result<Vec<f64>> {
        if counts.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                actual: counts.len(),
            });
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::EmptyInput("randomized response reports"));
        }
        if self.k == 1 {
            return Ok(vec![1.0]);
        }
        let (a, b) = (self.truthful_prob(), self.other_prob());
        Ok(counts
            .iter()
            .map(|&c| (c as f64 / n as f64 - b) / (a - b))
            .collect())
    }

    pub fn estimate(&self, reports: &[usize], decoder: Decoder) -> Result<Distribution> {
        let mut counts = vec![0u64; self.k];
        for &y in reports {
            check_input(y, self.k)?;
            counts[y] += 1;
        }
        decoder.apply(&self.unbiased_frequencies(&counts)?)
    }
}

impl FrequencyOracle for RandomizedResponse {
    fn k(&self) -> usize {
        self.k
    }

    fn output_size(&self) -> usize {
        self.k
    }

    fn simulate(
        &self,
        inputs: &[usize],
        rng: &mut dyn RngCore,
        decoder: Decoder,
    ) -> Result<Distribution> {
        let mut counts = vec![0u64; self.k];
        for &x in inputs {
            counts[self.privatize_with(x, rng)] += 1;
        }
        decoder.apply(&self.unbiased_frequencies(&counts)?)
    }
}
