//! The per-user privatization channel.
//!
//! For input `x` with output set `C_x` of size `n_x`:
//!
//! ```text
//! Q(y | x) = e^ε · d_x   if y ∈ C_x
//!            d_x         otherwise,        d_x = 1 / (n_x·e^ε + m − n_x)
//! ```

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measurement::SignMatrix;
use crate::rng::seeded_rng;

#[derive(Debug, Clone)]
pub struct Mechanism {
    matrix: Arc<SignMatrix>,
    epsilon: f64,
    d: Vec<f64>,
}

/// Result of [`Mechanism::audit_privacy`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyAudit {
    /// `max_{x1, x2, y} Q(y|x1) / Q(y|x2)` in closed form from the
    /// plus-counts. Exact when some row is `+1` in a least-plus column and
    /// `-1` in a most-plus column, an upper bound otherwise.
    pub max_ratio: f64,
    /// `ln max_ratio`.
    pub epsilon_effective: f64,
    /// `ε + 2β_achieved`.
    pub bound: f64,
}

impl PrivacyAudit {
    pub fn within_bound(&self) -> bool {
        self.epsilon_effective <= self.bound + 1e-12
    }
}

impl Mechanism {
    /// Runs the channel at `epsilon` as given; the achieved guarantee is
    /// reported by [`audit_privacy`](Self::audit_privacy).
    pub fn new(matrix: Arc<SignMatrix>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        let e = epsilon.exp();
        let m = matrix.m() as f64;
        let d = matrix
            .plus_counts()
            .iter()
            .map(|&n| 1.0 / (n as f64 * e + m - n as f64))
            .collect();
        Ok(Self { matrix, epsilon, d })
    }

    /// Runs the channel at `ε' = target − 2β_achieved` so that the audited
    /// bound `ε' + 2β_achieved` equals `target`.
    pub fn strict(matrix: Arc<SignMatrix>, target_epsilon: f64) -> Result<Self> {
        let beta = matrix.check_balance().beta_achieved;
        let eps = target_epsilon - 2.0 * beta;
        if eps.is_nan() || eps <= 0.0 {
            return Err(invalid(format!(
                "strict epsilon: balance slack β = {beta:.4} consumes the whole budget {target_epsilon}"
            )));
        }
        Self::new(matrix, eps)
    }

    pub fn matrix(&self) -> &SignMatrix {
        &self.matrix
    }

    pub fn shared_matrix(&self) -> &Arc<SignMatrix> {
        &self.matrix
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `d_x` for every input symbol.
    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn m(&self) -> usize {
        self.matrix.m()
    }

    pub fn k(&self) -> usize {
        self.matrix.k()
    }

    /// Bits needed to transmit one privatized sample.
    pub fn output_bits(&self) -> u32 {
        (self.m() as u64).next_power_of_two().trailing_zeros()
    }

    pub fn channel_prob(&self, y: usize, x: usize) -> Result<f64> {
        if x >= self.k() {
            return Err(Error::IndexOutOfRange {
                index: x,
                size: self.k(),
            });
        }
        if y >= self.m() {
            return Err(Error::IndexOutOfRange {
                index: y,
                size: self.m(),
            });
        }
        Ok(if self.matrix.is_plus(y, x) {
            self.epsilon.exp() * self.d[x]
        } else {
            self.d[x]
        })
    }

    /// Probability that the output falls in `C_x`: `n_x·e^ε·d_x`.
    pub fn in_set_prob(&self, x: usize) -> f64 {
        self.matrix.plus_counts()[x] as f64 * self.epsilon.exp() * self.d[x]
    }

    pub fn privatize(&self, x: usize, seed: u64) -> Result<usize> {
        if x >= self.k() {
            return Err(Error::IndexOutOfRange {
                index: x,
                size: self.k(),
            });
        }
        Ok(self.privatize_with(x, &mut seeded_rng(seed)))
    }

    /// One draw from `Q(·|x)`: first decide whether the output lands in
    /// `C_x`, then pick uniformly inside the chosen set.
    ///
    /// Panics if `x >= k`.
    pub fn privatize_with<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        let n_plus = self.matrix.plus_counts()[x];
        let n_minus = self.m() - n_plus;
        let inside = n_minus == 0 || (n_plus > 0 && rng.random::<f64>() < self.in_set_prob(x));
        if inside {
            self.matrix.select_plus(x, rng.random_range(0..n_plus))
        } else {
            self.matrix.select_minus(x, rng.random_range(0..n_minus))
        }
    }

    /// Privatizes every input with one shared generator.
    pub fn privatize_all<R: Rng + ?Sized>(&self, inputs: &[usize], rng: &mut R) -> Vec<usize> {
        inputs
            .iter()
            .map(|&x| self.privatize_with(x, rng))
            .collect()
    }

    /// Closed-form worst-case likelihood ratio
    /// `max_{x1,x2} e^ε·(n_{x2}e^ε + m − n_{x2}) / (n_{x1}e^ε + m − n_{x1})`.
    ///
    /// The normalizer is increasing in `n`, so the maximum pairs the largest
    /// and smallest plus-counts.
    pub fn audit_privacy(&self) -> PrivacyAudit {
        let e = self.epsilon.exp();
        let m = self.m() as f64;
        let counts = self.matrix.plus_counts();
        let n_max = *counts.iter().max().expect("k > 0") as f64;
        let n_min = *counts.iter().min().expect("k > 0") as f64;
        let max_ratio = e * (n_max * e + m - n_max) / (n_min * e + m - n_min);
        let beta = self.matrix.check_balance().beta_achieved;
        PrivacyAudit {
            max_ratio,
            epsilon_effective: max_ratio.ln(),
            bound: self.epsilon + 2.0 * beta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::Regime;

    fn four_by_two() -> Arc<SignMatrix> {
        // Column 0 has n = 2, column 1 has n = 1, column 2 has n = 3.
        Arc::new(
            SignMatrix::from_fn(4, 3, Regime::HighPrivacy, |r, c| match c {
                0 => r < 2,
                1 => r == 0,
                _ => r < 3,
            })
            .unwrap(),
        )
    }

    #[test]
    fn channel_prob_examples() {
        let mech = Mechanism::new(four_by_two(), 3f64.ln()).unwrap();
        assert!((mech.channel_prob(0, 0).unwrap() - 3.0 / 8.0).abs() < 1e-15);
        assert!((mech.channel_prob(3, 0).unwrap() - 1.0 / 8.0).abs() < 1e-15);
        for x in 0..3 {
            let row: f64 = (0..4).map(|y| mech.channel_prob(y, x).unwrap()).sum();
            assert!((row - 1.0).abs() < 1e-12);
        }
        assert!(mech.channel_prob(4, 0).is_err());
        assert!(mech.channel_prob(0, 3).is_err());
    }

    #[test]
    fn audit_closed_form() {
        let mech = Mechanism::new(four_by_two(), 3f64.ln()).unwrap();
        let audit = mech.audit_privacy();
        // 3 · (3·3 + 1) / (1·3 + 3) = 5
        assert!((audit.max_ratio - 5.0).abs() < 1e-12);
        assert!((audit.epsilon_effective - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn balanced_audit_is_exact() {
        let h = Arc::new(SignMatrix::hadamard(20).unwrap());
        let mech = Mechanism::new(h, 0.5).unwrap();
        let audit = mech.audit_privacy();
        assert!((audit.epsilon_effective - 0.5).abs() < 1e-12);
        assert_eq!(audit.bound, 0.5);
    }

    #[test]
    fn in_set_mass_frequency() {
        let mech = Mechanism::new(four_by_two(), 3f64.ln()).unwrap();
        let mut rng = seeded_rng(17);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| mech.privatize_with(0, &mut rng) < 2)
            .count();
        // 3σ = 3·sqrt(0.75·0.25/1e6) ≈ 0.0013
        assert!((hits as f64 / n as f64 - 0.75).abs() < 0.0013);
    }

    #[test]
    fn degenerate_and_deterministic() {
        let single =
            Arc::new(SignMatrix::from_fn(1, 3, Regime::HighPrivacy, |_, c| c == 0).unwrap());
        let mech = Mechanism::new(single, 0.3).unwrap();
        for x in 0..3 {
            for seed in 0..20 {
                assert_eq!(mech.privatize(x, seed).unwrap(), 0);
            }
        }
        let a = Arc::new(SignMatrix::rademacher(40, 10, 1).unwrap());
        let mech = Mechanism::new(a, 0.5).unwrap();
        for x in 0..10 {
            assert_eq!(
                mech.privatize(x, 99).unwrap(),
                mech.privatize(x, 99).unwrap()
            );
        }
        assert!(mech.privatize(10, 0).is_err());
        assert_eq!(mech.output_bits(), 6);
    }

    #[test]
    fn strict_mode_spends_exact_budget() {
        let a = Arc::new(SignMatrix::rademacher(600, 100, 4).unwrap());
        let beta = a.check_balance().beta_achieved;
        let mech = Mechanism::strict(a, 0.9).unwrap();
        assert!((mech.epsilon() - (0.9 - 2.0 * beta)).abs() < 1e-15);
        let audit = mech.audit_privacy();
        assert!((audit.bound - 0.9).abs() < 1e-12);
        assert!(audit.epsilon_effective <= 0.9 + 1e-12);

        let tiny = Arc::new(SignMatrix::from_fn(4, 2, Regime::HighPrivacy, |r, _| r == 0).unwrap());
        assert!(Mechanism::strict(tiny, 0.5).is_err());
    }

    #[test]
    fn rejects_bad_epsilon() {
        let a = four_by_two();
        for eps in [0.0, -1.0, f64::INFINITY, f64::NAN] {
            assert!(Mechanism::new(a.clone(), eps).is_err());
        }
    }
}
