//! Reference mechanisms the compressive pipeline is compared against.
//!
//! All four use the textbook parameterizations: k-ary randomized response,
//! Hadamard response expressed through the same sign-matrix pipeline,
//! subset selection, and basic one-hot RAPPOR without Bloom filters.

mod hadamard;
mod rappor;
mod rr;
mod subset;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use hadamard::HadamardResponse;
pub use rappor::Rappor;
pub use rr::RandomizedResponse;
pub use subset::{subset_size, SubsetSelection};

use crate::distributions::Distribution;
use crate::error::{invalid, Error, Result};
use crate::recovery::Decoder;

/// A complete locally private estimation protocol: every input is
/// privatized on the client side and the server estimates `p` from the
/// reports.
pub trait FrequencyOracle: Send + Sync {
    /// Input universe size.
    fn k(&self) -> usize;

    /// Size of the report alphabet (`m` for sign-matrix channels, `k` for
    /// randomized response and the set-valued mechanisms).
    fn output_size(&self) -> usize;

    /// Privatizes each input with `rng` and returns the decoded estimate.
    fn simulate(
        &self,
        inputs: &[usize],
        rng: &mut dyn RngCore,
        decoder: Decoder,
    ) -> Result<Distribution>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaselineKind {
    #[serde(rename = "RR")]
    Rr,
    #[serde(rename = "HR")]
    Hr,
    #[serde(rename = "SS")]
    Ss,
    #[serde(rename = "RAPPOR")]
    Rappor,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::Rr,
        BaselineKind::Hr,
        BaselineKind::Ss,
        BaselineKind::Rappor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Rr => "RR",
            BaselineKind::Hr => "HR",
            BaselineKind::Ss => "SS",
            BaselineKind::Rappor => "RAPPOR",
        }
    }

    pub fn build(self, k: usize, epsilon: f64) -> Result<Box<dyn FrequencyOracle>> {
        Ok(match self {
            BaselineKind::Rr => Box::new(RandomizedResponse::new(k, epsilon)?),
            BaselineKind::Hr => Box::new(HadamardResponse::new(k, epsilon)?),
            BaselineKind::Ss => Box::new(SubsetSelection::new(k, epsilon)?),
            BaselineKind::Rappor => Box::new(Rappor::new(k, epsilon)?),
        })
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RR" => Ok(BaselineKind::Rr),
            "HR" => Ok(BaselineKind::Hr),
            "SS" => Ok(BaselineKind::Ss),
            "RAPPOR" => Ok(BaselineKind::Rappor),
            other => Err(invalid(format!("unknown baseline '{other}'"))),
        }
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    Ok(())
}

pub(crate) fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid("k must be positive"));
    }
    Ok(())
}

pub(crate) fn check_input(x: usize, k: usize) -> Result<()> {
    if x >= k {
        return Err(Error::IndexOutOfRange { index: x, size: k });
    }
    Ok(())
}
