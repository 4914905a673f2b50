use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "anomscale", version, about = "Generate self-similar ensembles and estimate their scaling exponents")]
struct Cli {
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true, env = "ANOMSCALE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate an ensemble and write it to a file.
    Generate(commands::GenerateArgs),
    /// Estimate (J, L, M, H) of an ensemble file.
    Estimate(commands::EstimateArgs),
    /// Run the intraday pipeline on minute bars.
    Market(commands::MarketArgs),
    /// Write synthetic minute bars whose log price is a variable diffusion process.
    SynthPrices(commands::SynthArgs),
}

/// Bootstrap and fit settings shared by `estimate` and `market`.
#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Bootstrap replicates.
    #[arg(long, default_value_t = anomscale_core::estimators::DEFAULT_BOOTSTRAP)]
    pub bootstrap: usize,
    /// Master seed of the bootstrap resamples.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Smallest number of e-folds the correction term must decay across the grid.
    #[arg(long, default_value_t = anomscale_core::fitting::DEFAULT_MIN_DECAY)]
    pub min_decay: f64,
    /// Consistency threshold in combined standard errors.
    #[arg(long, default_value_t = anomscale_core::estimators::DEFAULT_K_SIGMA)]
    pub k_sigma: f64,
    /// Directory for report.json and the series/fit CSVs.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Market(a) => commands::market(a),
        Command::SynthPrices(a) => commands::synth_prices(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
