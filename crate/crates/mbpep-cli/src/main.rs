//! The `mbpep` binary: generate data, train interval ensembles, evaluate
//! saved models, and benchmark pruned against unpruned pools.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 unreadable or
//! invalid input file, 4 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mbpep_cli::commands::{
    self, CmdResult, EvalParams, GenDataParams,
};
use mbpep_cli::config::{Overrides, SourceKind};

#[derive(Parser)]
#[command(
    name = "mbpep",
    version,
    about = "Prediction-interval ensembles: train, prune, evaluate, benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    /// y = x^3 + Normal(0, noise-std)
    Cubic,
    /// y = e^x + Exp(rate), one-sided noise
    Exp,
}

impl From<GenKind> for SourceKind {
    fn from(kind: GenKind) -> SourceKind {
        match kind {
            GenKind::Cubic => SourceKind::Cubic,
            GenKind::Exp => SourceKind::Exp,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic regression dataset as CSV
    GenData {
        /// Which generator to draw from
        #[arg(long, value_enum)]
        kind: GenKind,
        /// Number of rows
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Noise standard deviation (cubic only)
        #[arg(long, default_value_t = 3.0)]
        noise_std: f64,
        /// Noise rate (exp only)
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
        /// Lower end of the input range (default depends on kind)
        #[arg(long)]
        x_min: Option<f64>,
        /// Upper end of the input range (default depends on kind)
        #[arg(long)]
        x_max: Option<f64>,
        /// CSV file to write
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a pool, prune it, and write model + report
    Train {
        /// Config document (`key = value` lines); flags override it
        #[arg(long)]
        config: Option<PathBuf>,
        /// Train on this CSV instead of a synthetic source
        #[arg(long)]
        data: Option<PathBuf>,
        /// Target column name in the CSV (default: rightmost)
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for pool training (results are identical for any
        /// value)
        #[arg(long, env = "MBPEP_THREADS")]
        threads: Option<usize>,
        /// Target coverage level in (0, 1)
        #[arg(long)]
        confidence: Option<f64>,
        /// Weight of the coverage-shortfall penalty
        #[arg(long)]
        penalty_c: Option<f64>,
        /// Sharpness of the soft coverage indicator
        #[arg(long)]
        softness: Option<f64>,
        /// Learners to train before pruning
        #[arg(long)]
        pool_size: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Use raw output heads instead of width-softplus bounds
        #[arg(long)]
        raw_bounds: bool,
        /// Keep the whole pool: skip the subset search
        #[arg(long)]
        no_prune: bool,
        /// Directory receiving model.json and report.json
        #[arg(long)]
        out: PathBuf,
        /// Also write the held-out test split (original units) as CSV
        #[arg(long)]
        test_out: Option<PathBuf>,
    },
    /// Score a saved model on a CSV dataset
    Eval {
        /// Model file written by `train`
        #[arg(long)]
        model: PathBuf,
        /// CSV dataset in original (unnormalized) units
        #[arg(long)]
        data: PathBuf,
        /// Target column name in the CSV (default: rightmost)
        #[arg(long)]
        target: Option<String>,
        /// Write per-sample inputs, target, and fused bounds as CSV
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Override the model's coverage level for scoring
        #[arg(long)]
        confidence: Option<f64>,
        #[arg(long)]
        penalty_c: Option<f64>,
        #[arg(long)]
        softness: Option<f64>,
        /// Write the eval report here (stdout shows a summary either way)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep pool sizes, comparing pruned and unpruned ensembles
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "MBPEP_THREADS")]
        threads: Option<usize>,
        #[arg(long)]
        confidence: Option<f64>,
        #[arg(long)]
        penalty_c: Option<f64>,
        #[arg(long)]
        softness: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        raw_bounds: bool,
        /// Skip the pruned arm entirely
        #[arg(long)]
        no_prune: bool,
        /// Pool sizes to sweep, comma separated
        #[arg(long, value_delimiter = ',')]
        pool_sizes: Option<Vec<usize>>,
        /// Repeats per pool size (repeat r runs under seed + r)
        #[arg(long)]
        repeats: Option<usize>,
        /// Report file to write
        #[arg(long)]
        out: PathBuf,
        /// Append one compact JSON line per scored arm here
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CmdResult<()> {
    match cli.command {
        Command::GenData {
            kind,
            n,
            seed,
            noise_std,
            rate,
            x_min,
            x_max,
            out,
        } => commands::cmd_gen_data(&GenDataParams {
            kind: kind.into(),
            n,
            seed,
            noise_std,
            rate,
            x_min,
            x_max,
            out,
        }),
        Command::Train {
            config,
            data,
            target,
            seed,
            threads,
            confidence,
            penalty_c,
            softness,
            pool_size,
            epochs,
            raw_bounds,
            no_prune,
            out,
            test_out,
        } => {
            let overrides = Overrides {
                seed,
                threads,
                data,
                target,
                confidence,
                penalty_c,
                softness,
                pool_size,
                epochs,
                raw_bounds,
                no_prune,
                pool_sizes: None,
                repeats: None,
            };
            let cfg = commands::resolve_config(config.as_deref(), &overrides)?;
            commands::cmd_train(&cfg, &out, test_out.as_deref())
        }
        Command::Eval {
            model,
            data,
            target,
            trace_out,
            confidence,
            penalty_c,
            softness,
            out,
        } => commands::cmd_eval(&EvalParams {
            model,
            data,
            target,
            trace_out,
            confidence,
            penalty_c,
            softness,
            out,
        }),
        Command::Bench {
            config,
            data,
            target,
            seed,
            threads,
            confidence,
            penalty_c,
            softness,
            epochs,
            raw_bounds,
            no_prune,
            pool_sizes,
            repeats,
            out,
            trace_out,
        } => {
            let overrides = Overrides {
                seed,
                threads,
                data,
                target,
                confidence,
                penalty_c,
                softness,
                pool_size: None,
                epochs,
                raw_bounds,
                no_prune,
                pool_sizes,
                repeats,
            };
            let cfg = commands::resolve_config(config.as_deref(), &overrides)?;
            commands::cmd_bench(&cfg, &out, trace_out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit_code as u8)
        }
    }
}
