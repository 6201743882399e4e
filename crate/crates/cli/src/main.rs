//! `ctf`: exact counterfactual queries, optimal bounds and consistency checks
//! from the command line.
//!
//! Exit codes: 0 success (and `check` pass), 1 `check` fail, 2 `check`
//! conditional, 64 usage, 65 bad input data, 70 internal error, 74 I/O.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ctf", version, about = "Counterfactual queries, bounds and consistency checks over finite SCMs")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

/// Where a model comes from: a model file or a built-in name.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ModelSource {
    /// Model file in the text format.
    #[arg(short = 'm', long = "model")]
    model: Option<PathBuf>,
    /// Name of a built-in model (see `ctf models`).
    #[arg(long)]
    builtin: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundMethod {
    /// Closed form when the query fits it, otherwise the general solver.
    Auto,
    /// Closed-form bound only; fails on other query shapes.
    Analytic,
    /// General solver only.
    Lp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProxyKind {
    /// Resample non-intervened labels from P(V | X = x').
    Conditional,
    /// Keep every non-intervened label.
    Preserve,
    /// Abduction in a fitted model without latent confounding.
    Markovian,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a model.
    Validate {
        /// Model file.
        file: Option<PathBuf>,
        /// Validate a built-in model instead of a file.
        #[arg(long, conflicts_with = "file")]
        builtin: Option<String>,
    },
    /// Evaluate a (conditional) counterfactual query exactly.
    Query {
        #[command(flatten)]
        source: ModelSource,
        /// Query, e.g. "P(F[Y=0]=0, H[Y=0]=1 | F=0, Y=1, H=0)".
        #[arg(short, long)]
        query: String,
    },
    /// Optimal bounds of a query from the model's observational distribution
    /// and a causal diagram.
    Bounds {
        #[command(flatten)]
        source: ModelSource,
        #[arg(short, long)]
        query: String,
        /// Causal diagram, e.g. "D -> B; C -> B; D <-> C" (default: the
        /// diagram the model induces).
        #[arg(short = 'g', long)]
        diagram: Option<String>,
        /// Observational distribution from a label CSV instead of the model.
        #[arg(long)]
        obs: Option<PathBuf>,
        /// Care set; the query may only mention these variables (default: all).
        #[arg(short = 'w', long, value_delimiter = ',')]
        care: Vec<String>,
        #[arg(long, value_enum, default_value_t = BoundMethod::Auto)]
        method: BoundMethod,
        /// Also report randomized inner bounds from N sampled compatible models.
        #[arg(long, value_name = "N")]
        oracle: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep every response type (may exceed the size guard).
        #[arg(long)]
        no_project: bool,
        /// Random starts for the local search used with three or more free components.
        #[arg(long, default_value_t = 32)]
        starts: usize,
    },
    /// Compare two models observationally, graphically and on queries.
    Compare {
        /// First model: a file or a built-in name (`-m1` is accepted).
        #[arg(long)]
        m1: String,
        /// Second model: a file or a built-in name (`-m2` is accepted).
        #[arg(long)]
        m2: String,
        /// Queries to evaluate under both models.
        #[arg(short, long)]
        query: Vec<String>,
    },
    /// Sample labels, or a proxy's edit log with `--proxy`.
    Sample {
        #[command(flatten)]
        source: ModelSource,
        #[arg(short, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (labels: required; proxy logs: default standard output).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Emit a JSON-lines log of this proxy's edits instead of labels.
        #[arg(long, value_enum, requires = "intervention")]
        proxy: Option<ProxyKind>,
        /// Intervention for the proxy, e.g. "Y=0" or "D=6,C=1".
        #[arg(long = "do", value_name = "X=x")]
        intervention: Option<String>,
        /// Diagram for the Markovian proxy (default: induced).
        #[arg(short = 'g', long)]
        diagram: Option<String>,
    },
    /// Generate a labelled image dataset (labels only for non-image models).
    Gen {
        #[arg(long)]
        builtin: String,
        #[arg(short, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check a proxy log for Ctf-consistency.
    Check {
        /// Proxy log (JSON lines).
        #[arg(long)]
        log: PathBuf,
        #[command(flatten)]
        source: ModelSource,
        /// Reference labels CSV (default: the model's exact distribution).
        #[arg(long)]
        obs: Option<PathBuf>,
        #[arg(short = 'g', long)]
        diagram: Option<String>,
        /// Care set (default: all variables).
        #[arg(short = 'w', long, value_delimiter = ',')]
        care: Vec<String>,
        /// Total-variation tolerance for the factual labels.
        #[arg(long, default_value = "0.02")]
        eps: String,
        /// Slack added to each bound.
        #[arg(long, default_value = "0.01")]
        delta: String,
    },
    /// List the built-in models.
    Models,
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 64, message: message.into() }
    }
    pub fn data(message: impl ToString) -> Self {
        CliError { code: 65, message: message.to_string() }
    }
    pub fn internal(message: impl ToString) -> Self {
        CliError { code: 70, message: message.to_string() }
    }
    pub fn io(message: impl ToString) -> Self {
        CliError { code: 74, message: message.to_string() }
    }
}

/// `-m1 x` / `-m2 x` are accepted as spellings of `--m1` / `--m2`.
fn normalize(args: impl Iterator<Item = String>) -> Vec<String> {
    args.map(|a| match a.as_str() {
        "-m1" => "--m1".to_string(),
        "-m2" => "--m2".to_string(),
        _ => a,
    })
    .collect()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse_from(normalize(std::env::args())) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| commands::run(cli)) {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(e)) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
        Err(_) => ExitCode::from(70),
    }
}
