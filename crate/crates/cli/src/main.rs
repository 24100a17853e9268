//! `twistlab`: experiments on central values of quadratic twists.

mod commands;
mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twistlab_core::moments::TamagawaWindow;

use commands::{Check, MomentArgs, MomentKind, VerifyArgs};
use config::{parse_class, ExperimentConfig};

/// Violations listed before an invariant failure exits.
const MAX_LISTED: usize = 10;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments; exit code 2.
    Config(String),
    /// Reading or writing failed; exit code 2.
    Io(String),
    /// Asserted invariants failed; exit code 1.
    Invariant(Vec<String>),
}

impl CliError {
    fn check(violations: Vec<String>) -> Result<(), CliError> {
        if violations.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invariant(violations))
        }
    }
}

impl From<twistlab_core::Error> for CliError {
    fn from(e: twistlab_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "twistlab",
    version,
    about = "Central L-values of quadratic twists of an elliptic curve"
)]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Restrict to one twist class, given as KAPPA,A (repeatable).
    #[arg(long = "class", global = true, value_parser = parse_class, allow_hyphen_values = true)]
    classes: Vec<(i8, i64)>,
    /// Family size bound X.
    #[arg(long = "X", global = true)]
    x: Option<u64>,
    /// Moment orders (repeatable).
    #[arg(long, global = true)]
    k: Vec<f64>,
    /// Only prime |d|.
    #[arg(long, global = true)]
    prime_only: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Scale on the truncation length of the central-value sum.
    #[arg(long, global = true)]
    truncation_scale: Option<f64>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Skip the on-disk trace and L-value caches.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Frobenius traces `A_p` and `a_p = A_p / sqrt p` for `p <= pmax`, as CSV.
    Coeffs {
        #[arg(long)]
        pmax: u64,
    },
    /// Members of each twist class with `|d| <= X`, as CSV.
    Enumerate,
    /// Central values over the smoothed window `X/2 <= |d| <= 5X/2`, as CSV.
    Lvalues,
    /// Moment reports against their main terms, as JSON.
    Moments {
        #[arg(long, value_enum, default_value = "first")]
        stat: MomentKind,
        #[arg(long, default_value_t = 1)]
        u: u64,
        #[arg(long, default_value_t = 1)]
        v: u64,
        /// Euler-product cutoff for the first-moment main term.
        #[arg(long, default_value_t = 1_000_000)]
        euler_cutoff: u64,
        /// Tamagawa window `[lo, hi]`; defaults to `[log X, X^{1/(log log X)^2}]`.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        window: Option<Vec<f64>>,
        /// Fail when any relative error exceeds this.
        #[arg(long)]
        max_rel_err: Option<f64>,
    },
    /// Tail frequencies of normalized log central values, as CSV.
    Dist {
        /// Subtract the Tamagawa term and use the splitting-field constants.
        #[arg(long)]
        adjust: bool,
    },
    /// Run an invariant suite; exits 1 on violations.
    Verify {
        #[arg(value_enum)]
        check: Check,
        /// Largest odd modulus for the Gauss-sum suite.
        #[arg(long, default_value_t = 3000)]
        n_max: u64,
        /// Randomized instances for the Poisson and inequality suites.
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
}

fn apply_overrides(cli: &Cli, mut c: ExperimentConfig) -> ExperimentConfig {
    if !cli.classes.is_empty() {
        c.classes = cli.classes.clone();
    }
    if cli.x.is_some() {
        c.x = cli.x;
    }
    if !cli.k.is_empty() {
        c.k = cli.k.clone();
    }
    c.prime_only |= cli.prime_only;
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if cli.workers.is_some() {
        c.workers = cli.workers;
    }
    if let Some(t) = cli.truncation_scale {
        c.truncation_scale = t;
    }
    if cli.out.is_some() {
        c.output.path = cli.out.clone();
    }
    if cli.cache_dir.is_some() {
        c.output.cache_dir = cli.cache_dir.clone();
    }
    c.output.no_cache |= cli.no_cache;
    c
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = apply_overrides(&cli, ExperimentConfig::load(cli.config.as_deref())?);
    let resolved = config.resolve()?;
    if let Some(n) = resolved.config.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?;
    }
    let mut out: Box<dyn Write> = match &resolved.config.output.path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| {
                CliError::Io(format!("cannot create {}: {e}", p.display()))
            })?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let result = match cli.command {
        Command::Coeffs { pmax } => commands::coeffs(&resolved, pmax, &mut out),
        Command::Enumerate => commands::enumerate_cmd(&resolved, &mut out),
        Command::Lvalues => commands::lvalues(&resolved, &mut out),
        Command::Moments {
            stat,
            u,
            v,
            euler_cutoff,
            window,
            max_rel_err,
        } => {
            let window = window.map(|w| TamagawaWindow { lo: w[0], hi: w[1] });
            let args = MomentArgs {
                kind: stat,
                u,
                v,
                window,
                max_rel_err,
                euler_cutoff,
            };
            commands::moments(&resolved, &args, &mut out)
        }
        Command::Dist { adjust } => commands::dist(&resolved, adjust, &mut out),
        Command::Verify {
            check,
            n_max,
            trials,
        } => commands::verify(
            &resolved,
            &VerifyArgs {
                check,
                n_max,
                trials,
            },
            &mut out,
        ),
    };
    out.flush().map_err(|e| CliError::Io(e.to_string()))?;
    result
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) | Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Invariant(v)) => {
            eprintln!("{} invariant violation(s):", v.len());
            for line in v.iter().take(MAX_LISTED) {
                eprintln!("  {line}");
            }
            ExitCode::from(1)
        }
    }
}
