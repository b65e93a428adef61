//! Server-side estimation: histogram, linear system, sparse recovery and
//! decoding back onto the simplex.

mod histogram;
pub mod omp;
pub mod simplex;
pub mod system;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use histogram::Histogram;
pub use omp::{omp, orthogonal_solve, OmpResult};
pub use system::{forward_map, CsSystem};

use crate::baselines::FrequencyOracle;
use crate::distributions::Distribution;
use crate::error::{invalid, Error, Result};
use crate::mechanism::Mechanism;

/// How a raw estimate is mapped back onto the simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoder {
    /// Euclidean projection onto the simplex.
    Project,
    /// Clip negatives, then rescale to sum one.
    Normalize,
}

impl Decoder {
    pub fn apply(self, raw: &[f64]) -> Result<Distribution> {
        let probs = match self {
            Decoder::Project => simplex::project_onto_simplex(raw),
            Decoder::Normalize => simplex::normalize_clipped(raw),
        };
        Distribution::new(probs)
    }

    pub fn name(self) -> &'static str {
        match self {
            Decoder::Project => "project",
            Decoder::Normalize => "normalize",
        }
    }
}

impl fmt::Display for Decoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Decoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "project" | "projected" | "projection" => Ok(Decoder::Project),
            "normalize" | "normalized" | "normalise" => Ok(Decoder::Normalize),
            other => Err(invalid(format!("unknown decoder '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub phat: Distribution,
    /// Nonzero coordinates of the recovered `D′p`.
    pub support: Vec<usize>,
    /// `D′⁻¹·f` before decoding.
    pub raw: Vec<f64>,
    pub decoder: Decoder,
}

/// Rescales the recovered `f ≈ D′p` and decodes it.
pub fn decode(f: &[f64], system: &CsSystem, decoder: Decoder) -> Result<Estimate> {
    if f.len() != system.k() {
        return Err(Error::LengthMismatch {
            expected: system.k(),
            actual: f.len(),
        });
    }
    let raw: Vec<f64> = f
        .iter()
        .zip(system.dprime())
        .map(|(fi, d)| fi / d)
        .collect();
    let support = f
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i)
        .collect();
    Ok(Estimate {
        phat: decoder.apply(&raw)?,
        support,
        raw,
        decoder,
    })
}

/// Default OMP iteration cap for sparsity `s`, leaving room for dropped
/// dependent columns.
pub fn default_max_iter(s: usize) -> usize {
    2 * s + 8
}

/// Histogram, system assembly, OMP and decoding in one call.
pub fn estimate(
    samples: &[usize],
    mech: &Mechanism,
    s: usize,
    decoder: Decoder,
) -> Result<Estimate> {
    let hist = Histogram::from_samples(samples, mech.m())?;
    let system = CsSystem::assemble(&hist, mech)?;
    let f = omp(&system, s, default_max_iter(s))?.coefficients;
    decode(&f, &system, decoder)
}

/// How the server solves the linear system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Orthogonal matching pursuit with target sparsity `s`.
    Omp { s: usize },
    /// One-shot least squares for matrices with orthogonal columns.
    Orthogonal,
}

/// The full client/server pipeline for one public matrix.
#[derive(Debug, Clone)]
pub struct CompressivePrivatization {
    mech: Mechanism,
    solver: Solver,
}

impl CompressivePrivatization {
    pub fn new(mech: Mechanism, solver: Solver) -> Result<Self> {
        if let Solver::Omp { s } = solver {
            if s == 0 || s > mech.m().min(mech.k()) {
                return Err(invalid(format!(
                    "sparsity {s} not in [1, min(m, k) = {}]",
                    mech.m().min(mech.k())
                )));
            }
        }
        Ok(Self { mech, solver })
    }

    pub fn mechanism(&self) -> &Mechanism {
        &self.mech
    }

    pub fn solver(&self) -> Solver {
        self.solver
    }

    pub fn estimate(&self, privatized: &[usize], decoder: Decoder) -> Result<Estimate> {
        let hist = Histogram::from_samples(privatized, self.mech.m())?;
        self.estimate_histogram(&hist, decoder)
    }

    pub fn estimate_histogram(&self, hist: &Histogram, decoder: Decoder) -> Result<Estimate> {
        let system = CsSystem::assemble(hist, &self.mech)?;
        let f = match self.solver {
            Solver::Omp { s } => omp(&system, s, default_max_iter(s))?.coefficients,
            Solver::Orthogonal => orthogonal_solve(&system),
        };
        decode(&f, &system, decoder)
    }
}

impl FrequencyOracle for CompressivePrivatization {
    fn k(&self) -> usize {
        self.mech.k()
    }

    fn output_size(&self) -> usize {
        self.mech.m()
    }

    fn simulate(
        &self,
        inputs: &[usize],
        rng: &mut dyn RngCore,
        decoder: Decoder,
    ) -> Result<Distribution> {
        let mut counts = vec![0u64; self.mech.m()];
        for &x in inputs {
            counts[self.mech.privatize_with(x, rng)] += 1;
        }
        let hist = Histogram::from_counts(counts)?;
        Ok(self.estimate_histogram(&hist, decoder)?.phat)
    }
}
