//! Seeded privatize → estimate sweeps over methods, decoders and sample
//! sizes.
//!
//! Every `(method, decoder, n, trial)` cell draws its own generator from a
//! hash of those labels and the base seed, so cells are independent of how
//! many other cells run and of the order they run in.

mod spec;

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::Arc;
use std::time::Instant;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use spec::{
    parse_distribution, read_distribution_file, DistSource, ExperimentSpec, Method, Profile,
    SparsityChoice, AUTO_SPARSITY_SLACK, FILE_SUM_TOLERANCE,
};

use crate::baselines::FrequencyOracle;
use crate::distributions::{error_l1, error_l2, Distribution, SparsityProfile};
use crate::error::{invalid, Result};
use crate::measurement::{required_m, BalanceReport, SignMatrix, DEFAULT_OVERSAMPLE};
use crate::mechanism::{Mechanism, PrivacyAudit};
use crate::recovery::{CompressivePrivatization, Decoder, Solver};
use crate::rng::{derive_seed, seeded_rng};

/// One `(method, decoder, n, trial)` measurement. Field order is the CSV
/// column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub method: String,
    pub decoder: Decoder,
    pub k: usize,
    /// Report alphabet size of the method.
    pub m: usize,
    pub epsilon: f64,
    pub s: usize,
    pub dist: String,
    pub n: usize,
    pub trial: usize,
    pub l1_error: f64,
    pub l2_error: f64,
    /// Empty unless timing was requested.
    pub wall_ms: Option<f64>,
    /// Seed of the generator used for this row.
    pub seed: u64,
}

/// Everything the harness resolved before running: echoed to the JSON
/// sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSpec {
    pub spec: ExperimentSpec,
    /// Sparsity passed to OMP.
    pub s: usize,
    /// ℓ₁ mass outside the top `s` entries of the input distribution.
    pub sparsity_slack: f64,
    pub support_size: usize,
    pub required_m: usize,
    /// Present when CP is among the methods.
    pub cp: Option<CpDetails>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpDetails {
    pub matrix_seed: u64,
    pub regime: crate::measurement::Regime,
    /// ε the channel actually runs at (differs from the target in strict mode).
    pub channel_epsilon: f64,
    pub balance: BalanceReport,
    pub audit: PrivacyAudit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub resolved: ResolvedSpec,
    pub rows: Vec<ExperimentRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub decoder: Decoder,
    pub n: usize,
    pub trials: usize,
    pub l1_mean: f64,
    pub l1_std: f64,
    pub l2_mean: f64,
    pub l2_std: f64,
}

/// Seed for one cell of the sweep.
pub fn cell_seed(base: u64, method: Method, decoder: Decoder, n: usize, trial: usize) -> u64 {
    derive_seed(
        base,
        &[
            method.name().as_bytes(),
            decoder.name().as_bytes(),
            &(n as u64).to_le_bytes(),
            &(trial as u64).to_le_bytes(),
        ],
    )
}

/// Seed of the public sign matrix.
pub fn matrix_seed(base: u64) -> u64 {
    derive_seed(base, &[b"matrix"])
}

fn resolve_sparsity(spec: &ExperimentSpec, p: &Distribution) -> Result<usize> {
    let s = match (spec.sparsity, &spec.dist) {
        (SparsityChoice::Fixed(s), _) => s,
        (SparsityChoice::Auto, DistSource::SparseUniform { s }) => *s,
        (SparsityChoice::Auto, _) => {
            SparsityProfile::smallest_for_slack(p.probs(), AUTO_SPARSITY_SLACK)?.s
        }
    };
    if s > spec.k {
        return Err(invalid(format!("sparsity {s} exceeds k = {}", spec.k)));
    }
    Ok(s)
}

fn build_cp(spec: &ExperimentSpec, s: usize) -> Result<(CompressivePrivatization, CpDetails)> {
    if s > spec.m.min(spec.k) {
        return Err(invalid(format!(
            "sparsity {s} exceeds min(m, k) = {}",
            spec.m.min(spec.k)
        )));
    }
    let seed = matrix_seed(spec.seed);
    let matrix = if spec.epsilon < 1.0 {
        SignMatrix::rademacher(spec.m, spec.k, seed)?
    } else {
        SignMatrix::biased(spec.m, spec.k, spec.epsilon, seed)?
    };
    let matrix = Arc::new(matrix);
    let mech = if spec.strict_epsilon {
        Mechanism::strict(matrix.clone(), spec.epsilon)?
    } else {
        Mechanism::new(matrix.clone(), spec.epsilon)?
    };
    let details = CpDetails {
        matrix_seed: seed,
        regime: matrix.regime(),
        channel_epsilon: mech.epsilon(),
        balance: matrix.check_balance(),
        audit: mech.audit_privacy(),
    };
    Ok((
        CompressivePrivatization::new(mech, Solver::Omp { s })?,
        details,
    ))
}

pub fn resolve(spec: &ExperimentSpec) -> Result<(ResolvedSpec, Distribution)> {
    spec.validate()?;
    let p = spec.dist.load(spec.k, spec.seed)?;
    let s = resolve_sparsity(spec, &p)?;
    let req = required_m(s, spec.k, DEFAULT_OVERSAMPLE)?;
    let cp = if spec.methods.contains(&Method::Cp) {
        if spec.m < req {
            warn!(
                "m = {} is below the advisory {req} rows for s = {s}, k = {}",
                spec.m, spec.k
            );
        }
        Some(build_cp(spec, s)?.1)
    } else {
        None
    };
    Ok((
        ResolvedSpec {
            spec: spec.clone(),
            s,
            sparsity_slack: crate::distributions::approx_sparsity_slack(p.probs(), s)?,
            support_size: p.support_size(),
            required_m: req,
            cp,
        },
        p,
    ))
}

/// Runs every `(method, decoder, n, trial)` cell. Output is a pure function
/// of `spec` (apart from `wall_ms` when timing is on).
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let (resolved, p) = resolve(spec)?;
    let s = resolved.s;

    let mut methods: Vec<(Method, Box<dyn FrequencyOracle>)> = Vec::new();
    for &method in &spec.methods {
        if methods.iter().any(|(m, _)| *m == method) {
            continue;
        }
        let oracle: Box<dyn FrequencyOracle> = match method {
            Method::Cp => Box::new(build_cp(spec, s)?.0),
            Method::Baseline(kind) => kind.build(spec.k, spec.epsilon)?,
        };
        methods.push((method, oracle));
    }
    let mut decoders = spec.decoders.clone();
    decoders.dedup();

    let mut cells = Vec::new();
    for (mi, (method, _)) in methods.iter().enumerate() {
        for &decoder in &decoders {
            for &n in &spec.n_grid {
                for trial in 0..spec.trials {
                    cells.push((mi, *method, decoder, n, trial));
                }
            }
        }
    }

    let dist_label = spec.dist.label();
    let rows = cells
        .into_par_iter()
        .map(|(mi, method, decoder, n, trial)| {
            let oracle = &methods[mi].1;
            let seed = cell_seed(spec.seed, method, decoder, n, trial);
            let start = Instant::now();
            let mut rng = seeded_rng(seed);
            let inputs = p.sample_with(&mut rng, n);
            let phat = oracle.simulate(&inputs, &mut rng, decoder)?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            Ok(ExperimentRow {
                method: method.name().to_string(),
                decoder,
                k: spec.k,
                m: oracle.output_size(),
                epsilon: spec.epsilon,
                s,
                dist: dist_label.clone(),
                n,
                trial,
                l1_error: error_l1(p.probs(), phat.probs())?,
                l2_error: error_l2(p.probs(), phat.probs())?,
                wall_ms: spec.record_timing.then_some(elapsed),
                seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentResult { resolved, rows })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-`(method, decoder, n)` mean and sample standard deviation of the
/// errors, sorted by method, decoder, then `n`.
pub fn summarize(rows: &[ExperimentRow]) -> Vec<SummaryRow> {
    type Key = (String, Decoder, usize);
    let mut groups: BTreeMap<Key, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for row in rows {
        let entry = groups
            .entry((row.method.clone(), row.decoder, row.n))
            .or_default();
        entry.0.push(row.l1_error);
        entry.1.push(row.l2_error);
    }
    groups
        .into_iter()
        .map(|((method, decoder, n), (l1, l2))| {
            let (l1_mean, l1_std) = mean_std(&l1);
            let (l2_mean, l2_std) = mean_std(&l2);
            SummaryRow {
                method,
                decoder,
                n,
                trials: l1.len(),
                l1_mean,
                l1_std,
                l2_mean,
                l2_std,
            }
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[ExperimentRow], w: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<ExperimentRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(Into::into))
        .collect()
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], w: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_sidecar<W: Write>(resolved: &ResolvedSpec, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, resolved)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::BaselineKind;

    fn small_spec() -> ExperimentSpec {
        ExperimentSpec {
            k: 64,
            m: 32,
            epsilon: 0.5,
            dist: DistSource::SparseUniform { s: 2 },
            sparsity: SparsityChoice::Auto,
            methods: vec![Method::Cp, Method::Baseline(BaselineKind::Rr)],
            decoders: vec![Decoder::Project],
            n_grid: vec![1000, 2000],
            trials: 3,
            seed: 9,
            strict_epsilon: false,
            record_timing: false,
        }
    }

    #[test]
    fn row_count_contract() {
        let mut spec = small_spec();
        spec.methods = vec![Method::Cp];
        spec.n_grid = (1..=10).map(|i| i * 100).collect();
        spec.trials = 10;
        assert_eq!(run(&spec).unwrap().rows.len(), 100);
    }

    #[test]
    fn auto_sparsity_for_geometric() {
        let mut spec = small_spec();
        spec.dist = DistSource::Geometric { lam: 0.6 };
        let (resolved, _) = resolve(&spec).unwrap();
        // 0.4^3 = 0.064 ≤ 0.1 < 0.4^2
        assert_eq!(resolved.s, 3);
        assert!(resolved.sparsity_slack <= 0.1);
    }

    #[test]
    fn unknown_inputs_are_rejected() {
        let mut spec = small_spec();
        spec.sparsity = SparsityChoice::Fixed(40);
        assert!(run(&spec).is_err());
        let mut spec = small_spec();
        spec.trials = 0;
        assert!(run(&spec).is_err());
    }

    #[test]
    fn summary_statistics() {
        let row = |n, l1: f64| ExperimentRow {
            method: "CP".into(),
            decoder: Decoder::Project,
            k: 1,
            m: 1,
            epsilon: 1.0,
            s: 1,
            dist: "unif:1".into(),
            n,
            trial: 0,
            l1_error: l1,
            l2_error: l1 / 2.0,
            wall_ms: None,
            seed: 0,
        };
        let single = summarize(&[row(10, 0.3)]);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].l1_mean, 0.3);
        assert_eq!(single[0].l1_std, 0.0);

        let same: Vec<_> = (0..10).map(|_| row(10, 0.25)).collect();
        assert_eq!(summarize(&same)[0].l1_std, 0.0);

        let sorted = summarize(&[row(20, 1.0), row(10, 2.0)]);
        assert_eq!(sorted[0].n, 10);
        assert_eq!(sorted[1].n, 20);
    }

    #[test]
    fn csv_round_trip() {
        let result = run(&small_spec()).unwrap();
        let mut buf = Vec::new();
        write_csv(&result.rows, &mut buf).unwrap();
        let header = std::str::from_utf8(&buf)
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string();
        assert_eq!(
            header,
            "method,decoder,k,m,epsilon,s,dist,n,trial,l1_error,l2_error,wall_ms,seed"
        );
        assert_eq!(read_csv(buf.as_slice()).unwrap(), result.rows);
    }
}
