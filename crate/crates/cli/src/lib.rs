//! Command-line harness for network bandit experiments: `run`, `sweep`,
//! `verify` and `plot`.

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod run;
pub mod svg;
pub mod sweep;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netbandit::sim::CheckpointMode;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use run::{cmd_run, cmd_run_config, RunOptions};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "NETBANDIT_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "netbandit", version, about = "Multi-agent bandit experiments on networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CheckpointArg {
    All,
    Geometric,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output root; overrides the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replication indices, `0,3,7` or `0..20`; overrides the config.
    #[arg(long, value_parser = parse_seeds)]
    pub seeds: Option<SeedList>,
    /// Worker threads (default: $NETBANDIT_WORKERS, else all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overwrite artifacts that differ from a previous run.
    #[arg(long)]
    pub force: bool,
    #[arg(long, value_enum)]
    pub checkpoint: Option<CheckpointArg>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a config and write trace, summary and plot.
    Run(RunArgs),
    /// Rerun a config along one axis and plot regret ratios.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        axis: sweep::Axis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
    },
    /// Check the estimator and inequality suites on random configurations.
    Verify {
        #[arg(long, default_value_t = verify::DEFAULT_VERIFY_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = verify::DEFAULT_VERIFY_SEED)]
        seed: u64,
        /// Negative control: flip the estimator's sign.
        #[arg(long, hide = true)]
        negate_estimator: bool,
    },
    /// Plot mean regret curves from trace CSVs.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long)]
        log_x: bool,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

fn parse_seeds(s: &str) -> Result<SeedList, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
        return if a < b {
            Ok(SeedList((a..b).collect()))
        } else {
            Err(format!("empty range {s}"))
        };
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(SeedList)
}

pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

impl RunArgs {
    pub fn options(&self) -> RunOptions {
        RunOptions {
            out: self.out.clone(),
            seeds: self.seeds.as_ref().map(|s| s.0.clone()),
            workers: self.workers.unwrap_or_else(default_workers),
            force: self.force,
            checkpoint: self.checkpoint.map(|c| match c {
                CheckpointArg::All => CheckpointMode::All,
                CheckpointArg::Geometric => CheckpointMode::Geometric,
            }),
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let out = cmd_run(&args.config, &args.options())?;
            for r in &out.summary.runs {
                println!("{:<20} mean regret {:>12.3} ± {:.3}", r.name, r.mean_regret, r.se);
            }
            println!("{}", out.dir.display());
        }
        Command::Sweep { run, axis, values } => {
            let (dir, points) = sweep::cmd_sweep(&run.config, axis, &values, &run.options())?;
            for p in &points {
                println!("{:<8} {:<20} ratio {:.4}", p.value, p.run, p.ratio);
            }
            println!("{}", dir.display());
        }
        Command::Verify {
            samples,
            seed,
            negate_estimator,
        } => {
            verify::cmd_verify(samples, seed, negate_estimator)?;
        }
        Command::Plot {
            csv,
            output,
            log_x,
            force,
        } => {
            let paths: Vec<&std::path::Path> = csv.iter().map(PathBuf::as_path).collect();
            plot::cmd_plot(&paths, &output, log_x, force)?;
            println!("{}", output.display());
        }
    }
    Ok(())
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
