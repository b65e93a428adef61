//! The public ±1 sign matrix `A ∈ {−1,+1}^{m×k}`.
//!
//! Column `x` is the incidence vector of the output set `C_x`: entry `(y, x)`
//! is `+1` iff `y ∈ C_x`. Columns are bit-packed (bit set means `+1`) and the
//! per-column plus-counts `n_x = |C_x|` are cached.

use std::io::{Read, Write};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::seeded_rng;

const WORD_BITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `ε < 1`: entries are ±1 with equal probability, column center `m/2`.
    HighPrivacy,
    /// `1 ≤ ε ≤ ln m`: entries are `+1` with probability `e^{−ε}`, column
    /// center `m/e^ε`.
    MediumPrivacy,
}

impl Regime {
    fn tag(self) -> u8 {
        match self {
            Regime::HighPrivacy => 0,
            Regime::MediumPrivacy => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Regime::HighPrivacy),
            1 => Ok(Regime::MediumPrivacy),
            other => Err(Error::MalformedMatrix(format!(
                "unknown regime tag {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignMatrix {
    m: usize,
    k: usize,
    words_per_col: usize,
    bits: Vec<u64>,
    plus_counts: Vec<usize>,
    regime: Regime,
    seed: u64,
    epsilon_gen: Option<f64>,
}

/// Worst relative deviation of the column plus-counts from the regime center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub beta_achieved: f64,
    pub target_center: f64,
    pub worst_column: usize,
}

impl BalanceReport {
    /// Whether every column lies in `(1 ± beta) · center`.
    pub fn satisfies(&self, beta: f64) -> bool {
        self.beta_achieved <= beta
    }
}

impl SignMatrix {
    fn empty(m: usize, k: usize, regime: Regime, seed: u64, epsilon_gen: Option<f64>) -> Self {
        let words_per_col = m.div_ceil(WORD_BITS);
        Self {
            m,
            k,
            words_per_col,
            bits: vec![0; words_per_col * k],
            plus_counts: vec![0; k],
            regime,
            seed,
            epsilon_gen,
        }
    }

    fn check_dims(m: usize, k: usize) -> Result<()> {
        if m == 0 || k == 0 {
            return Err(invalid(format!(
                "matrix dimensions must be positive, got {m}×{k}"
            )));
        }
        Ok(())
    }

    fn finish(mut self) -> Self {
        self.plus_counts = self.count_plus();
        self
    }

    fn tail_mask(&self) -> u64 {
        match self.m % WORD_BITS {
            0 => u64::MAX,
            r => (1u64 << r) - 1,
        }
    }

    /// I.i.d. Rademacher entries, deterministic in `seed`.
    pub fn rademacher(m: usize, k: usize, seed: u64) -> Result<Self> {
        Self::check_dims(m, k)?;
        let mut out = Self::empty(m, k, Regime::HighPrivacy, seed, None);
        let mut rng = seeded_rng(seed);
        let mask = out.tail_mask();
        let wpc = out.words_per_col;
        for col in out.bits.chunks_mut(wpc) {
            for w in col.iter_mut() {
                *w = rng.next_u64();
            }
            col[wpc - 1] &= mask;
        }
        Ok(out.finish())
    }

    /// I.i.d. entries equal to `+1` with probability `e^{−epsilon}`.
    pub fn biased(m: usize, k: usize, epsilon: f64, seed: u64) -> Result<Self> {
        Self::check_dims(m, k)?;
        let max = (m as f64).ln();
        if !(epsilon >= 1.0 && epsilon <= max) {
            return Err(invalid(format!(
                "biased matrix needs epsilon in [1, ln m = {max:.4}], got {epsilon}"
            )));
        }
        let plus_prob = (-epsilon).exp();
        let mut out = Self::empty(m, k, Regime::MediumPrivacy, seed, Some(epsilon));
        let mut rng = seeded_rng(seed);
        let wpc = out.words_per_col;
        for col in out.bits.chunks_mut(wpc) {
            for row in 0..m {
                if rng.random::<f64>() < plus_prob {
                    col[row / WORD_BITS] |= 1 << (row % WORD_BITS);
                }
            }
        }
        Ok(out.finish())
    }

    /// Columns `1..=k` of the Sylvester–Hadamard matrix of order
    /// [`hadamard_order`]`(k)`. The all-ones column 0 is skipped, so every
    /// column has exactly half of its entries equal to `+1`.
    pub fn hadamard(k: usize) -> Result<Self> {
        Self::check_dims(1, k)?;
        let order = hadamard_order(k);
        Self::from_fn(order, k, Regime::HighPrivacy, |row, col| {
            // H[r][c] = (−1)^{popcount(r & c)}
            ((row & (col + 1)).count_ones() & 1) == 0
        })
    }

    /// Builds a matrix from a predicate returning `true` for `+1` entries.
    pub fn from_fn(
        m: usize,
        k: usize,
        regime: Regime,
        mut is_plus: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        Self::check_dims(m, k)?;
        let mut out = Self::empty(m, k, regime, 0, None);
        for col in 0..k {
            for row in 0..m {
                if is_plus(row, col) {
                    out.bits[col * out.words_per_col + row / WORD_BITS] |= 1 << (row % WORD_BITS);
                }
            }
        }
        Ok(out.finish())
    }

    /// Sets the generation parameter used for medium-regime centering.
    pub fn with_epsilon_gen(mut self, epsilon_gen: f64) -> Self {
        self.epsilon_gen = Some(epsilon_gen);
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn epsilon_gen(&self) -> Option<f64> {
        self.epsilon_gen
    }

    pub fn plus_counts(&self) -> &[usize] {
        &self.plus_counts
    }

    /// Packed column `col`; bit `y` set means `A[y][col] = +1`.
    pub fn column_words(&self, col: usize) -> &[u64] {
        &self.bits[col * self.words_per_col..(col + 1) * self.words_per_col]
    }

    pub fn is_plus(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.m && col < self.k);
        self.column_words(col)[row / WORD_BITS] >> (row % WORD_BITS) & 1 == 1
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        if self.is_plus(row, col) {
            1.0
        } else {
            -1.0
        }
    }

    /// Recounts `+1` entries per column from the packed bits.
    pub fn count_plus(&self) -> Vec<usize> {
        (0..self.k)
            .map(|c| {
                self.column_words(c)
                    .iter()
                    .map(|w| w.count_ones() as usize)
                    .sum()
            })
            .collect()
    }

    /// `Σ_{y ∈ C_col} v[y]`.
    pub fn plus_sum(&self, col: usize, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.m);
        let mut acc = 0.0;
        for (w, &word) in self.column_words(col).iter().enumerate() {
            let mut bits = word;
            let base = w * WORD_BITS;
            while bits != 0 {
                acc += v[base + bits.trailing_zeros() as usize];
                bits &= bits - 1;
            }
        }
        acc
    }

    /// `⟨A_col, v⟩` given `v_sum = Σ v`.
    pub fn column_dot(&self, col: usize, v: &[f64], v_sum: f64) -> f64 {
        2.0 * self.plus_sum(col, v) - v_sum
    }

    /// Row index of the `rank`-th `+1` entry of column `col` (0-based).
    pub fn select_plus(&self, col: usize, rank: usize) -> usize {
        debug_assert!(rank < self.plus_counts[col]);
        select_in_words(self.column_words(col), rank, false, self.tail_mask())
    }

    /// Row index of the `rank`-th `−1` entry of column `col` (0-based).
    pub fn select_minus(&self, col: usize, rank: usize) -> usize {
        debug_assert!(rank < self.m - self.plus_counts[col]);
        select_in_words(self.column_words(col), rank, true, self.tail_mask())
    }

    /// Column-sum center for the matrix regime: `m/2`, or `m/e^ε` with the
    /// generation parameter in the medium regime.
    pub fn balance_center(&self) -> f64 {
        match (self.regime, self.epsilon_gen) {
            (Regime::MediumPrivacy, Some(eps)) => self.m as f64 / eps.exp(),
            _ => self.m as f64 / 2.0,
        }
    }

    pub fn check_balance(&self) -> BalanceReport {
        let center = self.balance_center();
        let (worst_column, dev) = self
            .plus_counts
            .iter()
            .map(|&n| (n as f64 - center).abs())
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, d)| {
                if d > best.1 {
                    (i, d)
                } else {
                    best
                }
            });
        BalanceReport {
            beta_achieved: dev / center,
            target_center: center,
            worst_column,
        }
    }

    /// Mean and standard deviation of a single entry under the generating
    /// distribution. Hadamard and Rademacher matrices both use `(0, 1)`.
    pub fn entry_moments(&self) -> (f64, f64) {
        match (self.regime, self.epsilon_gen) {
            (Regime::MediumPrivacy, Some(eps)) => {
                let p = (-eps).exp();
                (2.0 * p - 1.0, 2.0 * (p * (1.0 - p)).sqrt())
            }
            _ => (0.0, 1.0),
        }
    }

    /// Writes the matrix as
    /// `m: u64 | k: u64 | regime: u8 | seed: u64 | epsilon_gen: f64 | rows`,
    /// all little-endian. Each row is `ceil(k/8)` bytes with entry `(i, j)` in
    /// bit `j % 8` of byte `j / 8` (set means `+1`). A missing `epsilon_gen`
    /// is stored as NaN.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.m as u64).to_le_bytes())?;
        w.write_all(&(self.k as u64).to_le_bytes())?;
        w.write_all(&[self.regime.tag()])?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.epsilon_gen.unwrap_or(f64::NAN).to_le_bytes())?;
        let row_bytes = self.k.div_ceil(8);
        let mut row = vec![0u8; row_bytes];
        for i in 0..self.m {
            row.fill(0);
            for j in 0..self.k {
                if self.is_plus(i, j) {
                    row[j / 8] |= 1 << (j % 8);
                }
            }
            w.write_all(&row)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut u64_buf = [0u8; 8];
        let mut read_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut u64_buf)?;
            Ok(u64::from_le_bytes(u64_buf))
        };
        let m = read_u64(&mut r)? as usize;
        let k = read_u64(&mut r)? as usize;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let regime = Regime::from_tag(tag[0])?;
        let seed = read_u64(&mut r)?;
        let eps = f64::from_le_bytes(read_u64(&mut r)?.to_le_bytes());
        Self::check_dims(m, k).map_err(|e| Error::MalformedMatrix(e.to_string()))?;
        let epsilon_gen = (!eps.is_nan()).then_some(eps);
        if regime == Regime::MediumPrivacy && epsilon_gen.is_none() {
            return Err(Error::MalformedMatrix(
                "medium-regime matrix without epsilon_gen".into(),
            ));
        }
        let mut out = Self::empty(m, k, regime, seed, epsilon_gen);
        let row_bytes = k.div_ceil(8);
        let mut row = vec![0u8; row_bytes];
        for i in 0..m {
            r.read_exact(&mut row)?;
            for j in 0..k {
                if row[j / 8] >> (j % 8) & 1 == 1 {
                    out.bits[j * out.words_per_col + i / WORD_BITS] |= 1 << (i % WORD_BITS);
                }
            }
            if !k.is_multiple_of(8) && row[row_bytes - 1] >> (k % 8) != 0 {
                return Err(Error::MalformedMatrix(format!(
                    "padding bits set in row {i}"
                )));
            }
        }
        Ok(out.finish())
    }
}

fn select_in_words(words: &[u64], mut rank: usize, invert: bool, tail_mask: u64) -> usize {
    let last = words.len() - 1;
    for (i, &raw) in words.iter().enumerate() {
        let raw = if invert { !raw } else { raw };
        let word = if i == last { raw & tail_mask } else { raw };
        let ones = word.count_ones() as usize;
        if rank < ones {
            let mut bits = word;
            for _ in 0..rank {
                bits &= bits - 1;
            }
            return i * WORD_BITS + bits.trailing_zeros() as usize;
        }
        rank -= ones;
    }
    unreachable!("rank exceeds population count")
}

/// Smallest power of two strictly greater than `k`.
pub fn hadamard_order(k: usize) -> usize {
    (k + 1).next_power_of_two()
}

/// Advisory number of rows for `(s, 1/√2)`-RIP of a Rademacher matrix:
/// `ceil(oversample · s · ln(k/s))`, at least 1.
pub fn required_m(s: usize, k: usize, oversample: f64) -> Result<usize> {
    if s == 0 || s > k {
        return Err(invalid(format!("sparsity {s} not in [1, {k}]")));
    }
    if oversample.is_nan() || oversample <= 0.0 {
        return Err(invalid("oversample must be positive"));
    }
    let m = (oversample * s as f64 * (k as f64 / s as f64).ln()).ceil();
    Ok((m as usize).max(1))
}

/// Default oversampling constant for [`required_m`].
pub const DEFAULT_OVERSAMPLE: f64 = 4.0;

/// Union bound `2k·e^{−β²m/6}` on the probability that some column of an
/// `m×k` Rademacher matrix leaves `(1 ± β)·m/2`.
pub fn balance_failure_bound(m: usize, k: usize, beta: f64) -> f64 {
    2.0 * k as f64 * (-beta * beta * m as f64 / 6.0).exp()
}

/// Rows needed so that [`balance_failure_bound`] is at most `delta`:
/// `ceil(6 · ln(2k/δ) / β²)`.
pub fn rows_for_balance(k: usize, beta: f64, delta: f64) -> usize {
    (6.0 * (2.0 * k as f64 / delta).ln() / (beta * beta)).ceil() as usize
}
