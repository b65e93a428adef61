use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use compriv::harness::{self, DistSource, ExperimentSpec, Method, Profile, SparsityChoice};
use compriv::{Decoder, Mechanism, SignMatrix};
use log::info;

#[derive(Parser)]
#[command(
    name = "compriv",
    version,
    about = "Locally private distribution estimation by compressive privatization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a privatize/estimate sweep and write one CSV row per cell.
    Run(RunArgs),
    /// Mean and standard deviation of errors per (method, decoder, n).
    Summarize {
        /// CSV written by `run`.
        csv: PathBuf,
        /// Write the summary here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate or inspect a public sign matrix.
    #[command(subcommand)]
    Matrix(MatrixCommand),
}

#[derive(Args)]
struct RunArgs {
    /// Starting point; explicit flags override its values.
    #[arg(long, default_value = "desk")]
    profile: Profile,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Integer or "auto".
    #[arg(long)]
    sparsity: Option<SparsityChoice>,
    /// geo:<lam> | unif:<s> | file:<path>
    #[arg(long)]
    dist: Option<DistSource>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long, value_delimiter = ',')]
    decoders: Option<Vec<Decoder>>,
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Shrink the channel ε so that ε + 2β meets the target.
    #[arg(long)]
    strict_epsilon: bool,
    /// Fill the wall_ms column (makes output nondeterministic).
    #[arg(long)]
    timing: bool,
    /// CSV path; a JSON sidecar is written next to it. Stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn spec(self) -> ExperimentSpec {
        let mut spec = ExperimentSpec::profile(self.profile);
        if let Some(v) = self.k {
            spec.k = v;
        }
        if let Some(v) = self.m {
            spec.m = v;
        }
        if let Some(v) = self.epsilon {
            spec.epsilon = v;
        }
        if let Some(v) = self.sparsity {
            spec.sparsity = v;
        }
        if let Some(v) = self.dist {
            spec.dist = v;
        }
        if let Some(v) = self.methods {
            spec.methods = v;
        }
        if let Some(v) = self.decoders {
            spec.decoders = v;
        }
        if let Some(v) = self.n_grid {
            spec.n_grid = v;
        }
        if let Some(v) = self.trials {
            spec.trials = v;
        }
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        spec.strict_epsilon |= self.strict_epsilon;
        spec.record_timing |= self.timing;
        spec
    }
}

#[derive(Subcommand)]
enum MatrixCommand {
    /// Write a seeded sign matrix in the binary format.
    Generate {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Biased entries at this ε; balanced ±1 entries if omitted.
        #[arg(long)]
        epsilon_gen: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print dimensions, balance and the privacy audit of a stored matrix.
    Inspect {
        path: PathBuf,
        /// Channel ε for the audit; defaults to the generation ε, else 0.5.
        #[arg(long)]
        epsilon: Option<f64>,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn run(args: RunArgs) -> Result<()> {
    let out = args.out.clone();
    let spec = args.spec();
    let result = harness::run(&spec)?;
    info!("resolved sparsity s = {}", result.resolved.s);
    match out {
        Some(path) => {
            harness::write_csv(&result.rows, create(&path)?)?;
            let sidecar = path.with_extension("json");
            harness::write_sidecar(&result.resolved, create(&sidecar)?)?;
            info!("wrote {} rows to {}", result.rows.len(), path.display());
        }
        None => harness::write_csv(&result.rows, io::stdout().lock())?,
    }
    Ok(())
}

fn summarize(csv: &Path, out: Option<PathBuf>) -> Result<()> {
    let file = File::open(csv).with_context(|| format!("opening {}", csv.display()))?;
    let rows = harness::read_csv(BufReader::new(file))?;
    anyhow::ensure!(!rows.is_empty(), "{} has no rows", csv.display());
    let summary = harness::summarize(&rows);
    match out {
        Some(path) => harness::write_summary_csv(&summary, create(&path)?)?,
        None => harness::write_summary_csv(&summary, io::stdout().lock())?,
    }
    Ok(())
}

fn matrix(cmd: MatrixCommand) -> Result<()> {
    match cmd {
        MatrixCommand::Generate {
            m,
            k,
            seed,
            epsilon_gen,
            out,
        } => {
            let a = match epsilon_gen {
                Some(eps) => SignMatrix::biased(m, k, eps, seed)?,
                None => SignMatrix::rademacher(m, k, seed)?,
            };
            let mut w = create(&out)?;
            a.write_to(&mut w)?;
            w.flush()?;
        }
        MatrixCommand::Inspect { path, epsilon } => {
            let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
            let a = SignMatrix::read_from(BufReader::new(file))?;
            let eps = epsilon.or(a.epsilon_gen()).unwrap_or(0.5);
            let balance = a.check_balance();
            let audit = Mechanism::new(std::sync::Arc::new(a.clone()), eps)?.audit_privacy();
            let mut stdout = io::stdout().lock();
            writeln!(
                stdout,
                "m = {}, k = {}, regime = {:?}, seed = {}",
                a.m(),
                a.k(),
                a.regime(),
                a.seed()
            )?;
            writeln!(
                stdout,
                "balance: beta = {:.6} (center {:.3}, worst column {})",
                balance.beta_achieved, balance.target_center, balance.worst_column
            )?;
            writeln!(
                stdout,
                "audit at eps = {eps}: max ratio = {:.6}, effective eps = {:.6}, bound = {:.6}",
                audit.max_ratio, audit.epsilon_effective, audit.bound
            )?;
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Summarize { csv, out } => summarize(&csv, out),
        Command::Matrix(cmd) => matrix(cmd),
    }
}
