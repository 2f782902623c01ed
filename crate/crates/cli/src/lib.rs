//! Subcommands of the `ctl` binary. Each returns a [`CliError`] whose kind
//! decides the exit status: 2 for usage and configuration problems, 1 for
//! failures while running.

mod commands;
mod manifest;

pub use commands::{BenchConfig, RunReport, VerifyConfig, BENCH_HEADER, SUMMARY_HEADER};
pub use manifest::RunManifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ctl", version, about = "Cascaded transfer learning over many linear tasks")]
pub struct Cli {
    /// Root seed; overrides any `seed` key in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for replicate- and pair-level parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic task collection.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pairwise distance matrix over training splits.
    Dist {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        metric: String,
        #[arg(long)]
        out: PathBuf,
        /// JSON file with distance hyperparameters.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Build a rooted tree over a collection and write its edge list.
    Tree {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = TreeKind::Mst)]
        kind: TreeKind,
        /// Metric for the tree weights and the medoid root.
        #[arg(long, default_value = "gradient")]
        metric: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Run one experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        num_seeds: Option<usize>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        metric: Option<String>,
    },
    /// Check the error-propagation bounds on synthetic chains.
    Verify {
        /// JSON chain configuration; defaults to 100 random noiseless chains.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep methods, metrics and budgets into long-format CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TreeKind {
    Mst,
    Star,
    Random,
}

#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(e) | CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<ctl_core::Error> for CliError {
    fn from(e: ctl_core::Error) -> Self {
        use ctl_core::Error as E;
        match e {
            E::Config(_) | E::UnknownMetric(_) | E::InfeasibleBudget { .. } => CliError::Usage(e.into()),
            other => CliError::Runtime(other.into()),
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = cli.jobs {
            if j == 0 {
                return Err(CliError::Usage(anyhow::anyhow!("--jobs must be positive")));
            }
            b = b.num_threads(j);
        }
        b.build().map_err(|e| CliError::Runtime(e.into()))?
    };
    pool.install(|| commands::dispatch(&cli))
}
