//! Command-line interface for the weighted zero-sum library.
//!
//! Every subcommand prints one JSON document to standard output. Exit codes:
//! 0 success, 1 domain rejection, 2 budget exhaustion, 64 malformed input.

use std::path::PathBuf;
use std::process::exit;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use wzs_core::cache::Cache;
use wzs_core::engine::{SearchBudget, Seq};
use wzs_core::job::{self, JobOptions, EXIT_USAGE};
use wzs_core::known::Family;
use wzs_core::ring::WeightSet;
use wzs_core::verify::VerifyScope;

#[derive(Parser, Debug)]
#[command(name = "wzs", version)]
#[command(about = "Weighted zero-sum window constants over Z/nZ")]
#[command(after_help = "EXAMPLES:
    wzs constant --n 15 --weights units
    wzs check --n 25 --weights units --seq 10,4,20
    wzs enumerate --n 4 --weights one --count-only
    wzs construct --n 95 --weights units^3 --seed 7
    wzs decompose --n 95 --weights units^3 --seq 38,37,38,78,76
    wzs canon --n 7 --weights units^3 --seq 2,6,2
    wzs verify-theorems --max-n 31")]
struct Cli {
    /// Omit wall-clock timing so identical invocations print identical bytes.
    #[arg(long, global = true)]
    stable: bool,

    /// Result cache file (overrides the WZS_CACHE environment variable).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, clap::Args)]
struct BudgetArgs {
    /// Abort the search after visiting this many nodes.
    #[arg(long)]
    max_nodes: Option<u64>,

    /// Abort the search after this many seconds.
    #[arg(long)]
    max_seconds: Option<f64>,
}

impl BudgetArgs {
    fn budget(&self) -> SearchBudget {
        SearchBudget {
            max_nodes: self.max_nodes,
            max_elapsed: self.max_seconds.map(Duration::from_secs_f64),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Compute C_A(n) by exhaustive pruned depth-first search.
    Constant {
        #[arg(long)]
        n: u64,
        /// one | units | units^2 | units^3 | nonzero | set:1,4,...
        #[arg(long)]
        weights: String,
        /// Verify a constructed witness and assert the closed-form upper
        /// bound instead of searching.
        #[arg(long)]
        bound_only: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Decide whether sequences are extremal (zero-window-free at length
    /// C_A(n) - 1).
    Check {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        weights: String,
        /// Comma-separated residues.
        #[arg(long, conflicts_with = "seq_file")]
        seq: Option<String>,
        /// File with one comma-separated sequence per line.
        #[arg(long)]
        seq_file: Option<PathBuf>,
        /// Use this constant instead of resolving it.
        #[arg(long)]
        constant: Option<u64>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Enumerate all extremal sequences.
    Enumerate {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        weights: String,
        #[arg(long)]
        count_only: bool,
        /// One canonical representative per A-equivalence class.
        #[arg(long, conflicts_with = "count_only")]
        canonical: bool,
        #[arg(long)]
        constant: Option<u64>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Build an extremal sequence (deterministic, seeded random, or from a
    /// recipe).
    Construct {
        #[arg(long)]
        n: u64,
        /// one | units | units^2 | units^3
        #[arg(long)]
        weights: String,
        #[arg(long, conflicts_with = "recipe")]
        seed: Option<u64>,
        /// A recipe in the textual form printed by construct/decompose.
        #[arg(long)]
        recipe: Option<String>,
    },
    /// Extract and re-validate the structural certificate of an extremal
    /// sequence.
    Decompose {
        #[arg(long)]
        n: u64,
        /// units | units^2 | units^3
        #[arg(long)]
        weights: String,
        #[arg(long)]
        seq: String,
    },
    /// Canonicalize a sequence under A-equivalence.
    Canon {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        weights: String,
        #[arg(long)]
        seq: String,
    },
    /// Re-verify the supported statements up to a scope bound.
    VerifyTheorems {
        #[arg(long, default_value_t = 31)]
        max_n: u64,
        /// Cases per randomized suite.
        #[arg(long, default_value_t = 1000)]
        samples: u32,
        #[command(flatten)]
        budget: BudgetArgs,
    },
}

fn usage_error(message: impl std::fmt::Display) -> ! {
    eprintln!("wzs: {message}");
    eprintln!("Run 'wzs --help' for usage.");
    exit(EXIT_USAGE);
}

fn parse_weights(n: u64, text: &str) -> WeightSet {
    match WeightSet::parse(n, text) {
        Ok(w) => w,
        Err(e) => usage_error(e),
    }
}

fn parse_family(text: &str) -> Family {
    match Family::parse(text) {
        Ok(f) => f,
        Err(e) => usage_error(e),
    }
}

fn parse_seq(n: u64, text: &str) -> Seq {
    match Seq::parse(n, text) {
        Ok(s) => s,
        Err(e) => usage_error(e),
    }
}

fn parse_seqs(n: u64, seq: Option<&str>, seq_file: Option<&PathBuf>) -> Vec<Seq> {
    match (seq, seq_file) {
        (Some(text), None) => vec![parse_seq(n, text)],
        (None, Some(path)) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => usage_error(format!("cannot read {}: {e}", path.display())),
            };
            let seqs: Vec<Seq> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(|l| parse_seq(n, l))
                .collect();
            if seqs.is_empty() {
                usage_error(format!("{} contains no sequences", path.display()));
            }
            seqs
        }
        _ => usage_error("exactly one of --seq or --seq-file is required"),
    }
}

fn check_modulus(n: u64) {
    const MAX_MODULUS: u64 = 1_000_000;
    if n < 2 || n > MAX_MODULUS {
        usage_error(format!("n must be between 2 and {MAX_MODULUS}, got {n}"));
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                let _ = e.print();
                exit(0);
            }
            _ => {
                let _ = e.print();
                exit(EXIT_USAGE);
            }
        },
    };
    let opts = JobOptions {
        cache: cli.cache.map(Cache::new).or_else(Cache::from_env),
        stable: cli.stable,
    };
    let output = match &cli.command {
        Cmd::Constant { n, weights, bound_only, budget } => {
            check_modulus(*n);
            let w = parse_weights(*n, weights);
            job::run_constant(*n, &w, budget.budget(), *bound_only, &opts)
        }
        Cmd::Check { n, weights, seq, seq_file, constant, budget } => {
            check_modulus(*n);
            let w = parse_weights(*n, weights);
            let seqs = parse_seqs(*n, seq.as_deref(), seq_file.as_ref());
            job::run_check(*n, &w, &seqs, *constant, budget.budget(), &opts)
        }
        Cmd::Enumerate { n, weights, count_only, canonical, constant, budget } => {
            check_modulus(*n);
            let w = parse_weights(*n, weights);
            job::run_enumerate(*n, &w, *constant, *count_only, *canonical, budget.budget(), &opts)
        }
        Cmd::Construct { n, weights, seed, recipe } => {
            check_modulus(*n);
            let family = parse_family(weights);
            job::run_construct(*n, family, *seed, recipe.as_deref(), &opts)
        }
        Cmd::Decompose { n, weights, seq } => {
            check_modulus(*n);
            let family = parse_family(weights);
            let s = parse_seq(*n, seq);
            job::run_decompose(*n, family, &s, &opts)
        }
        Cmd::Canon { n, weights, seq } => {
            check_modulus(*n);
            let w = parse_weights(*n, weights);
            let s = parse_seq(*n, seq);
            job::run_canon(*n, &w, &s, &opts)
        }
        Cmd::VerifyTheorems { max_n, samples, budget } => {
            let scope = VerifyScope { max_n: *max_n, samples: *samples };
            job::run_verify(scope, budget.budget(), &opts)
        }
    };
    match serde_json::to_string_pretty(&output.document) {
        Ok(text) => println!("{text}"),
        Err(e) => {
            eprintln!("wzs: cannot serialize output: {e}");
            exit(1);
        }
    }
    exit(output.exit_code);
}
