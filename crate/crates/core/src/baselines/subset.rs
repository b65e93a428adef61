use rand::{Rng, RngCore};

use super::{check_epsilon, check_input, check_k, FrequencyOracle};
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::recovery::Decoder;
use crate::rng::seeded_rng;

/// Subset selection: report a size-`d` subset of `[k]`, where each subset
/// containing the input is `e^ε` times as likely as one that does not.
#[derive(Debug, Clone)]
pub struct SubsetSelection {
    k: usize,
    epsilon: f64,
    d: usize,
}

/// `max(1, round(k / (e^ε + 1)))`.
pub fn subset_size(k: usize, epsilon: f64) -> usize {
    ((k as f64 / (epsilon.exp() + 1.0)).round() as usize).clamp(1, k)
}

fn ln_binomial(n: usize, r: usize) -> f64 {
    (1..=r).map(|i| ((n - r + i) as f64 / i as f64).ln()).sum()
}

impl SubsetSelection {
    pub fn new(k: usize, epsilon: f64) -> Result<Self> {
        check_k(k)?;
        check_epsilon(epsilon)?;
        Ok(Self {
            k,
            epsilon,
            d: subset_size(k, epsilon),
        })
    }

    pub fn subset_size(&self) -> usize {
        self.d
    }

    /// `P(x ∈ S | x) = e^ε·d / (e^ε·d + k − d)`.
    pub fn inclusion_prob(&self) -> f64 {
        let ed = self.epsilon.exp() * self.d as f64;
        ed / (ed + (self.k - self.d) as f64)
    }

    /// `P(j ∈ S | x)` for `j ≠ x`.
    pub fn other_inclusion_prob(&self) -> f64 {
        if self.k == 1 {
            return 0.0;
        }
        let pi = self.inclusion_prob();
        let others = (self.k - 1) as f64;
        pi * (self.d - 1) as f64 / others + (1.0 - pi) * self.d as f64 / others
    }

    /// Probability of reporting exactly `subset` (sorted, distinct, size `d`).
    pub fn channel_prob(&self, subset: &[usize], x: usize) -> Result<f64> {
        check_input(x, self.k)?;
        if subset.len() != self.d
            || subset.windows(2).any(|w| w[0] >= w[1])
            || subset.last().is_some_and(|&j| j >= self.k)
        {
            return Ok(0.0);
        }
        // Normalizer e^ε·C(k−1, d−1) + C(k−1, d), in log space.
        let with = self.epsilon + ln_binomial(self.k - 1, self.d - 1);
        let without = if self.d < self.k {
            ln_binomial(self.k - 1, self.d)
        } else {
            f64::NEG_INFINITY
        };
        let hi = with.max(without);
        let ln_norm = hi + ((with - hi).exp() + (without - hi).exp()).ln();
        let weight = if subset.binary_search(&x).is_ok() {
            self.epsilon
        } else {
            0.0
        };
        Ok((weight - ln_norm).exp())
    }

    pub fn privatize(&self, x: usize, seed: u64) -> Result<Vec<usize>> {
        check_input(x, self.k)?;
        let mut out = Vec::with_capacity(self.d);
        self.privatize_into(x, &mut seeded_rng(seed), &mut out);
        Ok(out)
    }

    /// Writes the sorted report subset into `out`.
    pub fn privatize_into<R: Rng + ?Sized>(&self, x: usize, rng: &mut R, out: &mut Vec<usize>) {
        out.clear();
        let include = rng.random::<f64>() < self.inclusion_prob();
        let from_others = if include { self.d - 1 } else { self.d };
        if include {
            out.push(x);
        }
        if from_others > 0 {
            let picks = rand::seq::index::sample(rng, self.k - 1, from_others);
            out.extend(picks.into_iter().map(|j| if j >= x { j + 1 } else { j }));
        }
        out.sort_unstable();
    }

    /// Coordinatewise inversion of the inclusion frequencies `c_i / n`.
    pub fn unbiased_frequencies(&self, counts: &[u64], n: u64) -> Result<Vec<f64>> {
        if counts.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                actual: counts.len(),
            });
        }
        if n == 0 {
            return Err(Error::EmptyInput("subset selection reports"));
        }
        if self.k == 1 {
            return Ok(vec![1.0]);
        }
        let (pi, r) = (self.inclusion_prob(), self.other_inclusion_prob());
        Ok(counts
            .iter()
            .map(|&c| (c as f64 / n as f64 - r) / (pi - r))
            .collect())
    }

    pub fn estimate(&self, reports: &[Vec<usize>], decoder: Decoder) -> Result<Distribution> {
        let mut counts = vec![0u64; self.k];
        for report in reports {
            for &j in report {
                check_input(j, self.k)?;
                counts[j] += 1;
            }
        }
        decoder.apply(&self.unbiased_frequencies(&counts, reports.len() as u64)?)
    }
}

impl FrequencyOracle for SubsetSelection {
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
        let mut report = Vec::with_capacity(self.d);
        for &x in inputs {
            self.privatize_into(x, rng, &mut report);
            for &j in &report {
                counts[j] += 1;
            }
        }
        decoder.apply(&self.unbiased_frequencies(&counts, inputs.len() as u64)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_alphabet_uses_singletons() {
        let ss = SubsetSelection::new(2, 0.1).unwrap();
        assert_eq!(ss.subset_size(), 1);
        // With d = 1 the channel is binary randomized response.
        let e = 0.1f64.exp();
        assert!((ss.inclusion_prob() - e / (e + 1.0)).abs() < 1e-15);
        assert!((ss.other_inclusion_prob() - 1.0 / (e + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn true_item_is_favoured() {
        for k in [2, 3, 10, 100] {
            for eps in [0.05, 0.5, 1.0, 3.0] {
                let ss = SubsetSelection::new(k, eps).unwrap();
                assert!(
                    ss.inclusion_prob() > ss.other_inclusion_prob(),
                    "k={k} eps={eps}"
                );
            }
        }
    }

    #[test]
    fn reports_are_sorted_subsets() {
        let ss = SubsetSelection::new(20, 0.5).unwrap();
        for seed in 0..50 {
            let s = ss.privatize(seed as usize % 20, seed).unwrap();
            assert_eq!(s.len(), ss.subset_size());
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&j| j < 20));
        }
    }

    #[test]
    fn subset_size_formula() {
        assert_eq!(subset_size(2000, 0.5), 755);
        assert_eq!(subset_size(1, 0.5), 1);
        assert_eq!(subset_size(10, 5.0), 1);
    }
}
