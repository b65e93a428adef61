use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution as _};

use super::{check_epsilon, check_input, check_k, FrequencyOracle};
use crate::distributions::Distribution;
use crate::error::{invalid, Error, Result};
use crate::recovery::Decoder;
use crate::rng::seeded_rng;

/// Basic one-hot RAPPOR: encode `x` as a `k`-bit indicator and flip each
/// bit independently with probability `1/(e^{ε/2} + 1)`.
#[derive(Debug, Clone)]
pub struct Rappor {
    k: usize,
    epsilon: f64,
}

impl Rappor {
    pub fn new(k: usize, epsilon: f64) -> Result<Self> {
        check_k(k)?;
        check_epsilon(epsilon)?;
        Ok(Self { k, epsilon })
    }

    pub fn flip_prob(&self) -> f64 {
        1.0 / ((self.epsilon / 2.0).exp() + 1.0)
    }

    pub fn channel_prob(&self, bits: &[bool], x: usize) -> Result<f64> {
        check_input(x, self.k)?;
        if bits.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                actual: bits.len(),
            });
        }
        let f = self.flip_prob();
        Ok(bits
            .iter()
            .enumerate()
            .map(|(i, &b)| if b == (i == x) { 1.0 - f } else { f })
            .product())
    }

    pub fn privatize(&self, x: usize, seed: u64) -> Result<Vec<bool>> {
        check_input(x, self.k)?;
        Ok(self.privatize_with(x, &mut seeded_rng(seed)))
    }

    pub fn privatize_with<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> Vec<bool> {
        let f = self.flip_prob();
        (0..self.k)
            .map(|i| (i == x) != (rng.random::<f64>() < f))
            .collect()
    }

    /// Debiased per-coordinate frequencies `(c_i/n − f) / (1 − 2f)`.
    pub fn unbiased_frequencies(&self, counts: &[u64], n: u64) -> Result<Vec<f64>> {
        if counts.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                actual: counts.len(),
            });
        }
        if n == 0 {
            return Err(Error::EmptyInput("RAPPOR reports"));
        }
        let f = self.flip_prob();
        Ok(counts
            .iter()
            .map(|&c| (c as f64 / n as f64 - f) / (1.0 - 2.0 * f))
            .collect())
    }

    pub fn estimate(&self, reports: &[Vec<bool>], decoder: Decoder) -> Result<Distribution> {
        let mut counts = vec![0u64; self.k];
        for report in reports {
            if report.len() != self.k {
                return Err(Error::LengthMismatch {
                    expected: self.k,
                    actual: report.len(),
                });
            }
            for (c, &b) in counts.iter_mut().zip(report) {
                *c += b as u64;
            }
        }
        decoder.apply(&self.unbiased_frequencies(&counts, reports.len() as u64)?)
    }

    /// Aggregate bit counts for `inputs` without materializing reports.
    ///
    /// Bits are independent across users and coordinates, so the count for
    /// coordinate `i` is `Bin(N_i, 1 − f) + Bin(n − N_i, f)` with `N_i` the
    /// number of users holding `i`. This has exactly the distribution of
    /// summing per-user reports.
    pub fn aggregate_counts<R: Rng + ?Sized>(
        &self,
        inputs: &[usize],
        rng: &mut R,
    ) -> Result<Vec<u64>> {
        let mut holders = vec![0u64; self.k];
        for &x in inputs {
            check_input(x, self.k)?;
            holders[x] += 1;
        }
        let n = inputs.len() as u64;
        let f = self.flip_prob();
        holders
            .iter()
            .map(|&h| {
                let kept = Binomial::new(h, 1.0 - f).map_err(|e| invalid(e.to_string()))?;
                let flipped = Binomial::new(n - h, f).map_err(|e| invalid(e.to_string()))?;
                Ok(kept.sample(rng) + flipped.sample(rng))
            })
            .collect()
    }
}

impl FrequencyOracle for Rappor {
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
        let counts = self.aggregate_counts(inputs, rng)?;
        decoder.apply(&self.unbiased_frequencies(&counts, inputs.len() as u64)?)
    }
}
