use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineKind;
use crate::distributions::Distribution;
use crate::error::{invalid, Error, Result};
use crate::recovery::Decoder;
use crate::rng::derive_seed;

/// Tolerance on the sum of a distribution read from a file.
pub const FILE_SUM_TOLERANCE: f64 = 1e-6;
/// ℓ₁ slack used to pick `s` automatically for approximately sparse inputs.
pub const AUTO_SPARSITY_SLACK: f64 = 0.1;

/// Where the input distribution comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistSource {
    Geometric { lam: f64 },
    SparseUniform { s: usize },
    File { path: PathBuf },
}

impl DistSource {
    pub fn label(&self) -> String {
        match self {
            DistSource::Geometric { lam } => format!("geo:{lam}"),
            DistSource::SparseUniform { s } => format!("unif:{s}"),
            DistSource::File { path } => format!("file:{}", path.display()),
        }
    }

    /// Materializes the distribution over `[k]`. The random support of
    /// `unif:<s>` is drawn from a seed derived from `seed`.
    pub fn load(&self, k: usize, seed: u64) -> Result<Distribution> {
        match self {
            DistSource::Geometric { lam } => Distribution::geometric(k, *lam),
            DistSource::SparseUniform { s } => {
                Distribution::sparse_uniform(k, *s, derive_seed(seed, &[b"support"]))
            }
            DistSource::File { path } => {
                let p = read_distribution_file(path)?;
                if p.k() != k {
                    return Err(invalid(format!(
                        "{} holds {} probabilities but k = {k}",
                        path.display(),
                        p.k()
                    )));
                }
                Ok(p)
            }
        }
    }
}

impl fmt::Display for DistSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for DistSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').ok_or_else(|| {
            invalid(format!(
                "distribution '{s}' must look like geo:<lam>, unif:<s> or file:<path>"
            ))
        })?;
        match kind.trim().to_ascii_lowercase().as_str() {
            "geo" => {
                let lam: f64 = arg
                    .trim()
                    .parse()
                    .map_err(|_| invalid(format!("bad geometric parameter '{arg}'")))?;
                if !(lam > 0.0 && lam < 1.0) {
                    return Err(invalid(format!("geometric parameter {lam} not in (0, 1)")));
                }
                Ok(DistSource::Geometric { lam })
            }
            "unif" => {
                let s: usize = arg
                    .trim()
                    .parse()
                    .map_err(|_| invalid(format!("bad support size '{arg}'")))?;
                if s == 0 {
                    return Err(invalid("support size must be positive"));
                }
                Ok(DistSource::SparseUniform { s })
            }
            "file" => Ok(DistSource::File {
                path: PathBuf::from(arg),
            }),
            other => Err(invalid(format!("unknown distribution kind '{other}'"))),
        }
    }
}

/// One probability per line; blank lines and `#` comments are ignored. The
/// values must sum to one within [`FILE_SUM_TOLERANCE`] and are renormalized.
pub fn read_distribution_file(path: &std::path::Path) -> Result<Distribution> {
    let text = std::fs::read_to_string(path)?;
    parse_distribution(&text)
}

pub fn parse_distribution(text: &str) -> Result<Distribution> {
    let mut probs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            Error::InvalidDistribution(format!("line {}: '{line}' is not a number", lineno + 1))
        })?;
        probs.push(v);
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > FILE_SUM_TOLERANCE {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {total}, expected 1 ± {FILE_SUM_TOLERANCE}"
        )));
    }
    Distribution::from_weights(probs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SparsityChoice {
    Auto,
    #[serde(untagged)]
    Fixed(usize),
}

impl FromStr for SparsityChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("auto") {
            return Ok(SparsityChoice::Auto);
        }
        match s.trim().parse::<usize>() {
            Ok(v) if v > 0 => Ok(SparsityChoice::Fixed(v)),
            _ => Err(invalid(format!(
                "sparsity must be a positive integer or 'auto', got '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Compressive privatization with OMP recovery.
    #[serde(rename = "CP")]
    Cp,
    #[serde(untagged)]
    Baseline(BaselineKind),
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cp => "CP",
            Method::Baseline(b) => b.name(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("CP") {
            return Ok(Method::Cp);
        }
        s.parse::<BaselineKind>()
            .map(Method::Baseline)
            .map_err(|_| invalid(format!("unknown method '{}'", s.trim())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `k = 2000, m = 300`, five sample sizes up to 800k.
    Desk,
    /// `k = 10000, m = 500`, sample sizes 50k..1M in steps of 50k.
    Paper,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(invalid(format!("unknown profile '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub k: usize,
    /// Rows of the compressive sign matrix.
    pub m: usize,
    pub epsilon: f64,
    pub dist: DistSource,
    pub sparsity: SparsityChoice,
    pub methods: Vec<Method>,
    pub decoders: Vec<Decoder>,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Run the compressive channel at `ε − 2β_achieved` so the audited
    /// guarantee is exactly `ε`.
    pub strict_epsilon: bool,
    /// Record wall-clock time per row. Off by default so that output is
    /// byte-for-byte reproducible.
    pub record_timing: bool,
}

impl ExperimentSpec {
    pub fn profile(profile: Profile) -> Self {
        let (k, m, n_grid) = match profile {
            Profile::Desk => (2000, 300, vec![50_000, 100_000, 200_000, 400_000, 800_000]),
            Profile::Paper => (10_000, 500, (1..=20).map(|i| i * 50_000).collect()),
        };
        Self {
            k,
            m,
            epsilon: 0.5,
            dist: DistSource::SparseUniform { s: 10 },
            sparsity: SparsityChoice::Auto,
            methods: vec![
                Method::Cp,
                Method::Baseline(BaselineKind::Rr),
                Method::Baseline(BaselineKind::Hr),
            ],
            decoders: vec![Decoder::Project, Decoder::Normalize],
            n_grid,
            trials: 10,
            seed: 0,
            strict_epsilon: false,
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.m == 0 {
            return Err(invalid("k and m must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.n_grid.is_empty() {
            return Err(invalid("n grid must not be empty"));
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("n grid must be positive and strictly increasing"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.methods.is_empty() || self.decoders.is_empty() {
            return Err(invalid("at least one method and one decoder are required"));
        }
        if let DistSource::SparseUniform { s } = self.dist {
            if s > self.k {
                return Err(invalid(format!("unif:{s} exceeds k = {}", self.k)));
            }
        }
        Ok(())
    }
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self::profile(Profile::Desk)
    }
}
