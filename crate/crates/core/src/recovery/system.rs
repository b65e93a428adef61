//! The noisy compressive-sensing system `y = B·(D′p) + e₁ + e₂`.
//!
//! Writing each entry as `A = μ·J + σ·√m·B`, where `μ` and `σ` are the mean
//! and standard deviation of one entry (`0` and `1` for balanced ±1
//! matrices), the exact output distribution
//!
//! ```text
//! q = ((e^ε − 1)/2 · A + (e^ε + 1)/2 · J) · D · p
//! ```
//!
//! becomes
//!
//! ```text
//! K · (√m·q − 𝟏/√m) = B·(D′p) + K/√m · J·(D′ − I)·p
//! ```
//!
//! with `c = ((e^ε − 1)·μ + e^ε + 1)/2`, `D′ = m·c·D` and
//! `K = 2c / ((e^ε − 1)·σ)`. For balanced matrices this is
//! `K = (e^ε + 1)/(e^ε − 1)` and `D′ = m(e^ε + 1)/2 · D`; for entries that
//! are `+1` with probability `e^{−ε}` it is `K = (2e^ε − 1)/(e^ε − 1)^{3/2}`
//! and `D′ = m(2 − e^{−ε}) · D`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measurement::SignMatrix;
use crate::mechanism::Mechanism;

use super::Histogram;

#[derive(Debug, Clone)]
pub struct CsSystem {
    y: Vec<f64>,
    matrix: Arc<SignMatrix>,
    entry_mean: f64,
    scale: f64,
    dprime: Vec<f64>,
    prefactor: f64,
}

impl CsSystem {
    pub fn assemble(hist: &Histogram, mech: &Mechanism) -> Result<Self> {
        Self::from_frequencies(hist.qhat(), mech)
    }

    /// Assembles the system from any output-frequency vector, e.g. the exact
    /// `q` instead of the empirical `q̂`.
    pub fn from_frequencies(q: &[f64], mech: &Mechanism) -> Result<Self> {
        let matrix = mech.shared_matrix().clone();
        let m = matrix.m();
        if q.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "histogram has {} bins but the mechanism outputs {m} symbols",
                q.len()
            )));
        }
        let (entry_mean, entry_sd) = matrix.entry_moments();
        if entry_sd.is_nan() || entry_sd <= 0.0 {
            return Err(Error::ShapeMismatch(
                "sign matrix entries have zero variance".into(),
            ));
        }
        let e = mech.epsilon().exp();
        let center = ((e - 1.0) * entry_mean + e + 1.0) / 2.0;
        let prefactor = 2.0 * center / ((e - 1.0) * entry_sd);
        let sqrt_m = (m as f64).sqrt();
        let y = q
            .iter()
            .map(|&qi| prefactor * (sqrt_m * qi - 1.0 / sqrt_m))
            .collect();
        let dprime = mech.d().iter().map(|&d| m as f64 * center * d).collect();
        Ok(Self {
            y,
            matrix,
            entry_mean,
            scale: 1.0 / (entry_sd * sqrt_m),
            dprime,
            prefactor,
        })
    }

    /// The same operator and scaling with a different measurement vector.
    pub fn with_measurements(&self, y: Vec<f64>) -> Self {
        assert_eq!(y.len(), self.m(), "measurement vector must have m entries");
        Self { y, ..self.clone() }
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Diagonal of `D′`.
    pub fn dprime(&self) -> &[f64] {
        &self.dprime
    }

    /// The scalar `K` multiplying `√m·q̂ − 𝟏/√m`.
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn m(&self) -> usize {
        self.matrix.m()
    }

    pub fn k(&self) -> usize {
        self.matrix.k()
    }

    pub fn matrix(&self) -> &SignMatrix {
        &self.matrix
    }

    /// `B·v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.k(), "sensing input must have k entries");
        let v_sum: f64 = v.iter().sum();
        // A·v = 2·Σ_{j : A_ij = +1} v_j − Σ_j v_j
        let mut av = vec![-v_sum; self.m()];
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0.0 {
                continue;
            }
            for (w, &word) in self.matrix.column_words(j).iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    av[w * 64 + bits.trailing_zeros() as usize] += 2.0 * vj;
                    bits &= bits - 1;
                }
            }
        }
        av.iter()
            .map(|&a| (a - self.entry_mean * v_sum) * self.scale)
            .collect()
    }

    /// `⟨B_j, r⟩` for a single column.
    pub fn correlate_column(&self, j: usize, r: &[f64], r_sum: f64) -> f64 {
        (self.matrix.column_dot(j, r, r_sum) - self.entry_mean * r_sum) * self.scale
    }

    /// `Bᵀ·r`.
    pub fn correlate(&self, r: &[f64]) -> Vec<f64> {
        let r_sum: f64 = r.iter().sum();
        (0..self.k())
            .map(|j| self.correlate_column(j, r, r_sum))
            .collect()
    }

    /// Dense copy of column `j` of `B`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.m())
            .map(|i| (self.matrix.entry(i, j) - self.entry_mean) * self.scale)
            .collect()
    }

    /// `‖B_j‖²`, from the plus-count alone.
    pub fn column_norm_sq(&self, j: usize) -> f64 {
        let n = self.matrix.plus_counts()[j] as f64;
        let m = self.m() as f64;
        let mu = self.entry_mean;
        (n * (1.0 - mu).powi(2) + (m - n) * (1.0 + mu).powi(2)) * self.scale * self.scale
    }

    /// The balance noise `e₁ = K/√m · J·(D′ − I)·p`.
    pub fn balance_noise(&self, p: &[f64]) -> Vec<f64> {
        let offset: f64 = self
            .dprime
            .iter()
            .zip(p)
            .map(|(d, pi)| (d - 1.0) * pi)
            .sum();
        vec![self.prefactor / (self.m() as f64).sqrt() * offset; self.m()]
    }
}

/// Exact output distribution in matrix form,
/// `q = ((e^ε − 1)/2 · A + (e^ε + 1)/2 · J) · D · p`.
pub fn forward_map(mech: &Mechanism, p: &[f64]) -> Result<Vec<f64>> {
    if p.len() != mech.k() {
        return Err(Error::LengthMismatch {
            expected: mech.k(),
            actual: p.len(),
        });
    }
    let e = mech.epsilon().exp();
    let matrix = mech.matrix();
    let w: Vec<f64> = p.iter().zip(mech.d()).map(|(pi, d)| pi * d).collect();
    let w_sum: f64 = w.iter().sum();
    Ok((0..mech.m())
        .map(|y| {
            let aw: f64 = (0..mech.k()).map(|x| matrix.entry(y, x) * w[x]).sum();
            (e - 1.0) / 2.0 * aw + (e + 1.0) / 2.0 * w_sum
        })
        .collect())
}
