use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use qeband_cli::commands::simulate::SimulateConfig;
use qeband_cli::commands::{bands, decompose, simulate};
use qeband_cli::config::{self, BandsConfig, DecomposeConfig};
use qeband_cli::error::{CliError, CliResult};
use qeband_cli::{with_threads, Overrides};

#[derive(Parser)]
#[command(name = "qeband", version, about = "Uniform confidence bands for distribution, quantile and quantile-effect functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// DF-, QF- and QE-bands for the groups of a CSV dataset.
    Bands(DataArgs),
    /// Bands for a counterfactual decomposition of two groups.
    Decompose(DataArgs),
    /// Monte Carlo coverage, power and length of the bands.
    Simulate(SimArgs),
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long, default_value = "qeband-out")]
    out: PathBuf,
    /// Worker threads (defaults to one per core).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bootstrap draws.
    #[arg(long)]
    draws: Option<usize>,
    /// Confidence level.
    #[arg(long)]
    level: Option<f64>,
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    data: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Distribution-regression link: logit, probit, linear or gamma-incomplete.
    #[arg(long)]
    link: Option<String>,
    /// Support restriction: none, auto or a comma-separated list.
    #[arg(long)]
    support: Option<String>,
    /// Outcome grid: auto, lo:hi, lo:hi:step or a comma-separated list.
    #[arg(long)]
    grid: Option<String>,
    /// Upper end of the outcome domain (a number or inf).
    #[arg(long)]
    domain_sup: Option<String>,
    /// Also write SVG plots.
    #[arg(long)]
    plots: bool,
}

impl DataArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            level: self.common.level,
            draws: self.common.draws,
            seed: self.common.seed,
            link: self.link.clone(),
            support: self.support.clone(),
            grid: self.grid.clone(),
            domain_sup: self.domain_sup.clone(),
        }
    }
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    common: Common,
    /// Replications per design.
    #[arg(long)]
    nsim: Option<usize>,
    /// Add n = 6400 to the sweep.
    #[arg(long)]
    include_6400: bool,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Bands(args) => {
            let mut cfg: BandsConfig = config::load(args.common.config.as_deref(), "{}")?;
            args.overrides().apply_bands(&mut cfg)?;
            with_threads(args.common.threads, || bands::run(&cfg, &args.data, &args.common.out, args.plots))??;
        }
        Command::Decompose(args) => {
            let path = args
                .common
                .config
                .as_deref()
                .ok_or_else(|| CliError::Config("decompose needs --config naming the group column and groups".into()))?;
            let mut cfg: DecomposeConfig = config::load(Some(path), "")?;
            args.overrides().apply_decompose(&mut cfg)?;
            with_threads(args.common.threads, || decompose::run(&cfg, &args.data, &args.common.out, args.plots))??;
        }
        Command::Simulate(args) => {
            let mut cfg: SimulateConfig = config::load(args.common.config.as_deref(), "{}")?;
            if let Some(v) = args.common.seed {
                cfg.seed = v;
            }
            if let Some(v) = args.common.draws {
                cfg.draws = v;
            }
            if let Some(v) = args.common.level {
                cfg.p = vec![v];
            }
            if let Some(v) = args.nsim {
                cfg.nsim = v;
            }
            if args.include_6400 && !cfg.n.contains(&6400) {
                cfg.n.push(6400);
            }
            with_threads(args.common.threads, || simulate::run(&cfg, &args.common.out))??;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
