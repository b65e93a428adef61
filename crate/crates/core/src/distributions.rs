//! Discrete distributions on `[k] = {0, .., k-1}`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::seeded_rng;

/// Absolute tolerance on `Σ p_i = 1`.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A probability vector over `[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates that every entry is finite and nonnegative and the entries
    /// sum to one within [`SUM_TOLERANCE`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("k must be positive".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} is {p}, expected a finite nonnegative value"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Scales nonnegative weights to sum to one.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k must be positive"));
        }
        Ok(Self {
            probs: vec![1.0 / k as f64; k],
        })
    }

    pub fn point_mass(k: usize, atom: usize) -> Result<Self> {
        if atom >= k {
            return Err(Error::IndexOutOfRange {
                index: atom,
                size: k,
            });
        }
        let mut probs = vec![0.0; k];
        probs[atom] = 1.0;
        Ok(Self { probs })
    }

    /// Truncated geometric distribution `p(i) ∝ (1-lam)^i · lam` for
    /// `i = 0..k`, renormalized over `[k]`.
    pub fn geometric(k: usize, lam: f64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k must be positive"));
        }
        if !(lam > 0.0 && lam < 1.0) {
            return Err(invalid(format!("geometric parameter {lam} not in (0, 1)")));
        }
        let ratio = 1.0 - lam;
        let mut weights = Vec::with_capacity(k);
        let mut w = lam;
        for _ in 0..k {
            weights.push(w);
            w *= ratio;
        }
        Self::from_weights(weights)
    }

    /// `s` entries equal to `1/s` on a uniformly random support chosen by `seed`.
    pub fn sparse_uniform(k: usize, s: usize, seed: u64) -> Result<Self> {
        if s == 0 || s > k {
            return Err(invalid(format!("sparsity {s} not in [1, {k}]")));
        }
        let mut rng = seeded_rng(seed);
        let mut probs = vec![0.0; k];
        for i in rand::seq::index::sample(&mut rng, k, s) {
            probs[i] = 1.0 / s as f64;
        }
        Ok(Self { probs })
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|p| **p > 0.0).count()
    }

    /// `n` i.i.d. draws, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<usize> {
        self.sample_with(&mut seeded_rng(seed), n)
    }

    /// `n` i.i.d. draws by inverse CDF over the cumulative weights.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<usize> {
        // Construction only fails for empty or all-zero weights, which
        // `Distribution` rules out.
        let index = WeightedIndex::new(&self.probs).expect("validated distribution");
        (0..n).map(|_| index.sample(rng)).collect()
    }
}

impl AsRef<[f64]> for Distribution {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

/// Target sparsity `s` and the ℓ₁ mass `lambda` left outside the top `s`
/// entries: `p` is approximately `(s, lambda)`-sparse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityProfile {
    pub s: usize,
    pub lambda: f64,
}

impl SparsityProfile {
    pub fn new(s: usize, lambda: f64, k: usize) -> Result<Self> {
        if s == 0 || s > k {
            return Err(invalid(format!("sparsity {s} not in [1, {k}]")));
        }
        if lambda.is_nan() || lambda < 0.0 {
            return Err(invalid(format!("slack {lambda} must be nonnegative")));
        }
        Ok(Self { s, lambda })
    }

    /// Profile of `p` at sparsity `s`, with the tightest slack.
    pub fn of(p: &[f64], s: usize) -> Result<Self> {
        let lambda = approx_sparsity_slack(p, s)?;
        Self::new(s, lambda, p.len())
    }

    /// Smallest `s` such that `p` is `(s, max_slack)`-sparse.
    pub fn smallest_for_slack(p: &[f64], max_slack: f64) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::EmptyInput("distribution"));
        }
        let mut sorted = p.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = sorted.iter().sum();
        let mut kept = 0.0;
        for (i, v) in sorted.iter().enumerate() {
            kept += v;
            let slack = (total - kept).max(0.0);
            if slack <= max_slack {
                return Self::new(i + 1, slack, p.len());
            }
        }
        Self::new(p.len(), 0.0, p.len())
    }
}

/// Keeps the `s` largest entries (lowest index wins ties) and zeroes the rest.
pub fn top_s(p: &[f64], s: usize) -> Result<Vec<f64>> {
    if s > p.len() {
        return Err(invalid(format!("sparsity {s} exceeds k = {}", p.len())));
    }
    let mut order: Vec<usize> = (0..p.len()).collect();
    // Stable sort keeps lower indices first among equal values.
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
    let mut out = vec![0.0; p.len()];
    for &i in &order[..s] {
        out[i] = p[i];
    }
    Ok(out)
}

/// `‖p − [p]_s‖₁`.
pub fn approx_sparsity_slack(p: &[f64], s: usize) -> Result<f64> {
    let kept = top_s(p, s)?;
    Ok(p.iter().zip(&kept).map(|(a, b)| (a - b).abs()).sum())
}

fn check_lengths(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    Ok(())
}

pub fn error_l1(p: &[f64], q: &[f64]) -> Result<f64> {
    check_lengths(p, q)?;
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum())
}

pub fn error_l2(p: &[f64], q: &[f64]) -> Result<f64> {
    check_lengths(p, q)?;
    Ok(p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_two_terms() {
        let p = Distribution::geometric(2, 0.5).unwrap();
        assert!((p.probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.probs()[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(Distribution::geometric(1, 0.9).unwrap().probs(), &[1.0]);
    }

    #[test]
    fn geometric_rejects_bad_parameter() {
        for lam in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(Distribution::geometric(10, lam).is_err());
        }
    }

    #[test]
    fn geo_08_is_roughly_sparse() {
        let p = Distribution::geometric(10_000, 0.8).unwrap();
        let profile = SparsityProfile::smallest_for_slack(p.probs(), 0.1).unwrap();
        // (1 - 0.8)^s ≤ 0.1 first holds at s = 2.
        assert_eq!(profile.s, 2);
        assert!(profile.lambda <= 0.1);
        assert!(approx_sparsity_slack(p.probs(), 1).unwrap() > 0.1);
    }

    #[test]
    fn sparse_uniform_shapes() {
        let full = Distribution::sparse_uniform(4, 4, 99).unwrap();
        assert_eq!(full.probs(), &[0.25; 4]);

        let single = Distribution::sparse_uniform(10, 1, 3).unwrap();
        assert_eq!(single.support_size(), 1);
        assert_eq!(single.probs().iter().filter(|p| **p == 1.0).count(), 1);

        let unif10 = Distribution::sparse_uniform(10_000, 10, 5).unwrap();
        assert_eq!(unif10.support_size(), 10);
        assert!(unif10.probs().iter().all(|p| *p == 0.0 || *p == 0.1));

        assert!(Distribution::sparse_uniform(3, 4, 0).is_err());
    }

    #[test]
    fn top_s_examples() {
        let p = [0.5, 0.3, 0.2];
        assert_eq!(top_s(&p, 3).unwrap(), vec![0.5, 0.3, 0.2]);
        assert_eq!(top_s(&p, 1).unwrap(), vec![0.5, 0.0, 0.0]);
        assert_eq!(top_s(&[0.4, 0.4, 0.2], 1).unwrap(), vec![0.4, 0.0, 0.0]);
        assert!(top_s(&p, 4).is_err());
    }

    #[test]
    fn slack_examples() {
        let p = [0.5, 0.3, 0.2];
        assert!((approx_sparsity_slack(&p, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((approx_sparsity_slack(&p, 2).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(approx_sparsity_slack(&[0.0, 1.0, 0.0], 1).unwrap(), 0.0);
    }

    #[test]
    fn error_norms() {
        let p = [0.6, 0.4];
        assert_eq!(error_l1(&p, &p).unwrap(), 0.0);
        assert_eq!(error_l1(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert!((error_l2(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((error_l1(&p, &[0.5, 0.5]).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(
            error_l1(&p, &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn sampling_point_mass_and_determinism() {
        let p = Distribution::point_mass(5, 3).unwrap();
        assert_eq!(p.sample(5, 1), vec![3; 5]);

        let q = Distribution::geometric(20, 0.3).unwrap();
        assert_eq!(q.sample(1000, 42), q.sample(1000, 42));
        assert_ne!(q.sample(1000, 42), q.sample(1000, 43));
    }

    #[test]
    fn sampling_fair_coin() {
        let p = Distribution::uniform(2).unwrap();
        let n = 1_000_000;
        let zeros = p.sample(n, 7).iter().filter(|x| **x == 0).count();
        // 3σ = 3 · 0.5 / 1000 = 0.0015 < 0.002
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.002);
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![]).is_err());
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
        assert!(Distribution::new(vec![0.5, 0.5 + 1e-10]).is_ok());
    }
}
