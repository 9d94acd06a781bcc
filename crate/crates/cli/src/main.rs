//! `efc`: synthetic data, features, collinearity treatment, ensemble
//! training, backtests, importance and reports from one config file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use efc::config::RunConfig;
use efc::{commands, CliError};

#[derive(Debug, Parser)]
#[command(name = "efc", version, about = "Ensemble weekly sales forecasting")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true, env = "EFC_CONFIG")]
    config: Option<PathBuf>,
    /// Global seed; overrides the config.
    #[arg(long, global = true, env = "EFC_SEED")]
    seed: Option<u64>,
    /// Worker threads; overrides the config.
    #[arg(long, global = true, env = "EFC_WORKERS")]
    workers: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long, global = true, env = "EFC_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic feeds into <out>/data.
    Synth,
    /// Build lead-aligned feature tables from a feed directory.
    Features {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Reduce a feature table to one representative per correlated cluster.
    Decollinear {
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Search variable subsets and build a change-point ensemble.
    Train {
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Moving-window backtest over every method and lead.
    Backtest {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Permutation importance of a trained ensemble.
    Importance {
        #[arg(long)]
        ensemble: Option<PathBuf>,
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Tables and plots from finished stages.
    Report,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (mut cfg, config_bytes) = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => {
            let cfg = RunConfig::default();
            let bytes = serde_json::to_vec(&cfg).expect("config serializes");
            (cfg, bytes)
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        cfg.workers = w;
    }
    let out = cli
        .out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set output_dir".into()))?;
    let ctx = commands::Context::new(cfg, &config_bytes, out);
    match cli.command {
        Command::Synth => commands::synth(&ctx),
        Command::Features { data } => commands::features(&ctx, data),
        Command::Decollinear { table } => commands::decollinear(&ctx, table),
        Command::Train { table } => commands::train(&ctx, table),
        Command::Backtest { data } => commands::backtest(&ctx, data),
        Command::Importance { ensemble, table } => commands::importance(&ctx, ensemble, table),
        Command::Report => commands::report(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
