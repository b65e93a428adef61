//! Orthogonal matching pursuit over a [`CsSystem`].

use crate::error::{invalid, Result};

use super::CsSystem;

/// Residual norm below which the pursuit stops early.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// A candidate column whose component orthogonal to the current support is
/// below this fraction of its norm is treated as linearly dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OmpResult {
    /// Length-`k` solution with nonzeros only on `support`.
    pub coefficients: Vec<f64>,
    /// Selected columns in selection order.
    pub support: Vec<usize>,
    /// Residual norm before the first selection and after each one.
    pub residual_norms: Vec<f64>,
    /// Columns dropped because they were dependent on the support.
    pub rejected: Vec<usize>,
}

/// Incremental QR factorization of the selected columns by modified
/// Gram–Schmidt with one reorthogonalization pass.
struct SupportQr {
    q: Vec<Vec<f64>>,
    // Column-major upper triangle: r[j][i] = R[i][j] for i <= j.
    r: Vec<Vec<f64>>,
    // Qᵀ·y
    qty: Vec<f64>,
}

impl SupportQr {
    fn new() -> Self {
        Self {
            q: Vec::new(),
            r: Vec::new(),
            qty: Vec::new(),
        }
    }

    /// Appends `column`; returns the new unit direction, or `None` when the
    /// column is numerically in the span of the current support.
    fn push(&mut self, column: &[f64], y: &[f64]) -> Option<&[f64]> {
        let norm0 = dot(column, column).sqrt();
        if norm0 == 0.0 {
            return None;
        }
        let mut v = column.to_vec();
        let mut coeffs = vec![0.0; self.q.len() + 1];
        for _ in 0..2 {
            for (i, qi) in self.q.iter().enumerate() {
                let c = dot(qi, &v);
                coeffs[i] += c;
                axpy(-c, qi, &mut v);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm < RANK_TOLERANCE * norm0 {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        coeffs[self.q.len()] = norm;
        self.qty.push(dot(&v, y));
        self.r.push(coeffs);
        self.q.push(v);
        self.q.last().map(Vec::as_slice)
    }

    /// Least-squares coefficients on the support: back-substitution of
    /// `R·c = Qᵀy`.
    fn solve(&self) -> Vec<f64> {
        let n = self.q.len();
        let mut c = vec![0.0; n];
        for i in (0..n).rev() {
            let tail: f64 = (i + 1..n).map(|j| self.r[j][i] * c[j]).sum();
            c[i] = (self.qty[i] - tail) / self.r[i][i];
        }
        c
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Greedy recovery of an `s`-sparse `x` from `y ≈ B·x`.
///
/// Each iteration picks the column maximizing `|⟨B_j, residual⟩|`, refits
/// the support by least squares and updates the residual. Stops after `s`
/// selections, `max_iter` iterations (dropped columns count), or when the
/// residual norm falls below [`RESIDUAL_TOLERANCE`].
pub fn omp(system: &CsSystem, s: usize, max_iter: usize) -> Result<OmpResult> {
    let (m, k) = (system.m(), system.k());
    if s == 0 || s > m.min(k) {
        return Err(invalid(format!(
            "sparsity {s} not in [1, min(m, k) = {}]",
            m.min(k)
        )));
    }
    let y = system.y();
    let mut residual = y.to_vec();
    let mut qr = SupportQr::new();
    let mut support = Vec::with_capacity(s);
    let mut rejected = Vec::new();
    let mut excluded = vec![false; k];
    let mut residual_norms = vec![dot(&residual, &residual).sqrt()];

    for _ in 0..max_iter {
        if support.len() == s || *residual_norms.last().unwrap() < RESIDUAL_TOLERANCE {
            break;
        }
        let r_sum: f64 = residual.iter().sum();
        let mut best: Option<(usize, f64)> = None;
        for j in (0..k).filter(|&j| !excluded[j]) {
            let c = system.correlate_column(j, &residual, r_sum).abs();
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((j, c));
            }
        }
        let Some((j, corr)) = best else { break };
        if corr == 0.0 {
            break;
        }
        excluded[j] = true;
        match qr.push(&system.column(j), y) {
            Some(direction) => {
                // The residual is already orthogonal to the earlier directions.
                let c = dot(direction, &residual);
                axpy(-c, direction, &mut residual);
                support.push(j);
                residual_norms.push(dot(&residual, &residual).sqrt());
            }
            None => rejected.push(j),
        }
    }

    let mut coefficients = vec![0.0; k];
    for (&j, c) in support.iter().zip(qr.solve()) {
        coefficients[j] = c;
    }
    Ok(OmpResult {
        coefficients,
        support,
        residual_norms,
        rejected,
    })
}

/// Least-squares solution when the columns of `B` are mutually orthogonal:
/// `f_j = ⟨B_j, y⟩ / ‖B_j‖²`. This is what OMP converges to with `s = k`
/// on a Hadamard matrix, computed in one pass.
pub fn orthogonal_solve(system: &CsSystem) -> Vec<f64> {
    let y = system.y();
    let y_sum: f64 = y.iter().sum();
    (0..system.k())
        .map(|j| system.correlate_column(j, y, y_sum) / system.column_norm_sq(j))
        .collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::measurement::{Regime, SignMatrix};
    use crate::mechanism::Mechanism;

    /// A system whose measurement vector is exactly `B·x`.
    fn noiseless(matrix: SignMatrix, x: &[f64]) -> CsSystem {
        let m = matrix.m();
        let mech = Mechanism::new(Arc::new(matrix), 0.5).unwrap();
        let base = CsSystem::from_frequencies(&vec![1.0 / m as f64; m], &mech).unwrap();
        base.with_measurements(base.apply(x))
    }

    #[test]
    fn zero_measurements_give_zero() {
        let a = SignMatrix::rademacher(32, 64, 1).unwrap();
        let sys = noiseless(a, &[0.0; 64]);
        let out = omp(&sys, 3, 10).unwrap();
        assert!(out.coefficients.iter().all(|c| *c == 0.0));
        assert!(out.support.is_empty());
    }

    #[test]
    fn one_sparse_recovery_matches_brute_force() {
        for seed in 0..10u64 {
            let k = 256;
            let a = SignMatrix::rademacher(32, k, seed).unwrap();
            let mut x = vec![0.0; k];
            let atom = (seed as usize * 37) % k;
            x[atom] = 0.7;
            let sys = noiseless(a, &x);

            // Brute force: best single-column least-squares fit.
            let y = sys.y().to_vec();
            let best = (0..k)
                .map(|j| {
                    let col = sys.column(j);
                    let c = dot(&col, &y) / dot(&col, &col);
                    let res: f64 = y
                        .iter()
                        .zip(&col)
                        .map(|(yi, ci)| (yi - c * ci).powi(2))
                        .sum();
                    (j, res)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert_eq!(best.0, atom);

            let out = omp(&sys, 1, 1).unwrap();
            assert_eq!(out.support, vec![atom]);
            assert!((out.coefficients[atom] - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn residuals_never_increase() {
        let a = SignMatrix::rademacher(64, 200, 4).unwrap();
        let mut x = vec![0.0; 200];
        x[3] = 0.5;
        x[77] = 0.3;
        x[150] = 0.2;
        let sys = noiseless(a, &x);
        let noisy = sys.with_measurements(
            sys.y()
                .iter()
                .enumerate()
                .map(|(i, v)| v + 0.01 * (i as f64).sin())
                .collect(),
        );
        let out = omp(&noisy, 8, 16).unwrap();
        for w in out.residual_norms.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn duplicate_columns_are_rejected() {
        // Columns 0 and 1 are identical, so the second is dependent.
        let a = SignMatrix::from_fn(8, 3, Regime::HighPrivacy, |r, c| match c {
            0 | 1 => r % 2 == 0,
            _ => r < 4,
        })
        .unwrap();
        let sys = noiseless(a, &[0.4, 0.0, 0.6]);
        let noisy = sys.with_measurements(
            sys.y()
                .iter()
                .enumerate()
                .map(|(i, v)| v + 0.05 * (i as f64 + 1.0).ln())
                .collect(),
        );
        let out = omp(&noisy, 3, 10).unwrap();
        assert_eq!(out.support.len() + out.rejected.len(), 3);
        assert!(!out.rejected.is_empty());
        assert!(out.coefficients.iter().all(|c| c.is_finite()));
    }

    #[test]
    fn rejects_oversized_sparsity() {
        let a = SignMatrix::rademacher(4, 10, 0).unwrap();
        let sys = noiseless(a, &[0.0; 10]);
        assert!(omp(&sys, 5, 5).is_err());
        assert!(omp(&sys, 0, 5).is_err());
    }

    #[test]
    fn omp_on_hadamard_equals_orthogonal_solve() {
        let h = SignMatrix::hadamard(12).unwrap();
        let x: Vec<f64> = (0..12).map(|i| ((i * 7) % 5) as f64 / 10.0 - 0.1).collect();
        let sys = noiseless(h, &x);
        let noisy = sys.with_measurements(
            sys.y()
                .iter()
                .enumerate()
                .map(|(i, v)| v + 0.02 * (i as f64).cos())
                .collect(),
        );
        let direct = orthogonal_solve(&noisy);
        let greedy = omp(&noisy, 12, 24).unwrap();
        for (a, b) in direct.iter().zip(&greedy.coefficients) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}
