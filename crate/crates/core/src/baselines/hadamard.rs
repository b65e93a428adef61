use std::sync::Arc;

use rand::{Rng, RngCore};

use super::{check_epsilon, FrequencyOracle};
use crate::distributions::Distribution;
use crate::error::Result;
use crate::measurement::SignMatrix;
use crate::mechanism::Mechanism;
use crate::recovery::{CompressivePrivatization, Decoder, Estimate, Solver};

/// Hadamard response: the sign-matrix channel with `A` made of columns
/// `1..=k` of a Sylvester–Hadamard matrix, decoded by the one-shot
/// orthogonal least-squares solve (dense recovery with `s = k`).
#[derive(Debug, Clone)]
pub struct HadamardResponse {
    pipeline: CompressivePrivatization,
}

impl HadamardResponse {
    pub fn new(k: usize, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        let matrix = Arc::new(SignMatrix::hadamard(k)?);
        let mech = Mechanism::new(matrix, epsilon)?;
        Ok(Self {
            pipeline: CompressivePrivatization::new(mech, Solver::Orthogonal)?,
        })
    }

    pub fn mechanism(&self) -> &Mechanism {
        self.pipeline.mechanism()
    }

    pub fn pipeline(&self) -> &CompressivePrivatization {
        &self.pipeline
    }

    pub fn privatize(&self, x: usize, seed: u64) -> Result<usize> {
        self.mechanism().privatize(x, seed)
    }

    pub fn privatize_with<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        self.mechanism().privatize_with(x, rng)
    }

    pub fn estimate(&self, reports: &[usize], decoder: Decoder) -> Result<Estimate> {
        self.pipeline.estimate(reports, decoder)
    }
}

impl FrequencyOracle for HadamardResponse {
    fn k(&self) -> usize {
        self.mechanism().k()
    }

    fn output_size(&self) -> usize {
        self.mechanism().m()
    }

    fn simulate(
        &self,
        inputs: &[usize],
        rng: &mut dyn RngCore,
        decoder: Decoder,
    ) -> Result<Distribution> {
        self.pipeline.simulate(inputs, rng, decoder)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recovery::{forward_map, omp, CsSystem};

    #[test]
    fn hadamard_is_perfectly_balanced() {
        let hr = HadamardResponse::new(10, 0.5).unwrap();
        assert_eq!(hr.mechanism().m(), 16);
        let audit = hr.mechanism().audit_privacy();
        assert!((audit.epsilon_effective - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exact_output_distribution_is_inverted() {
        let hr = HadamardResponse::new(6, 0.8).unwrap();
        let p = [0.5, 0.0, 0.25, 0.0, 0.125, 0.125];
        let q = forward_map(hr.mechanism(), &p).unwrap();
        let sys = CsSystem::from_frequencies(&q, hr.mechanism()).unwrap();
        let f = crate::recovery::orthogonal_solve(&sys);
        for (fi, pi) in f.iter().zip(p) {
            assert!((fi - pi).abs() < 1e-12);
        }
        // Greedy recovery with s = k reaches the same solution.
        let g = omp(&sys, 6, 12).unwrap();
        for (gi, pi) in g.coefficients.iter().zip(p) {
            assert!((gi - pi).abs() < 1e-10);
        }
    }
}
