//! Locally differentially private estimation of sparse discrete distributions.
//!
//! Each user maps a symbol `x ∈ [k]` to an output `y ∈ [m]` with `m ≪ k`
//! through a randomized channel built from a public ±1 sign matrix. The server
//! builds the output histogram, rewrites it as a noisy compressive-sensing
//! system and recovers the input distribution with orthogonal matching
//! pursuit followed by a simplex decoder.
//!
//! Modules:
//!
//! * [`distributions`]: test distributions, sparsity utilities, error metrics.
//! * [`measurement`]: sign matrix generation and column-balance checks.
//! * [`mechanism`]: the privatization channel and its privacy audit.
//! * [`recovery`]: histogram, linear system assembly, OMP and decoders.
//! * [`baselines`]: randomized response, Hadamard response, subset selection
//!   and RAPPOR.
//! * [`harness`]: seeded experiment sweeps with CSV/JSON output.

pub mod baselines;
pub mod distributions;
mod error;
pub mod harness;
pub mod measurement;
pub mod mechanism;
pub mod recovery;
mod rng;

pub use baselines::{
    BaselineKind, FrequencyOracle, HadamardResponse, RandomizedResponse, Rappor, SubsetSelection,
};
pub use distributions::{Distribution, SparsityProfile};
pub use error::{Error, Result};
pub use measurement::{BalanceReport, Regime, SignMatrix};
pub use mechanism::{Mechanism, PrivacyAudit};
pub use recovery::{CompressivePrivatization, CsSystem, Decoder, Estimate, Histogram};
pub use rng::{derive_seed, seeded_rng, SeededRng};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
