mod error;
mod model;
mod record;
mod runs;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use circuit_vi::{gen_ising, polynomial_to_factor_graph, CouplingMode, IsingSpec};
use clap::{Parser, Subcommand, ValueEnum};

use error::{CliError, Result};
use record::RunMethod;
use runs::{fit_run, oracle_run, FitSettings};

#[derive(Parser)]
#[command(name = "circuit-vi", version, about = "Variational inference with selective sum-product networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random Ising grid as a polynomial text file.
    GenIsing {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long, value_enum, default_value_t = Mode::Mixed)]
        mode: Mode,
        #[arg(long, env = "CIRCUIT_VI_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the model as a UAI MARKOV file.
        #[arg(long)]
        uai: Option<PathBuf>,
    },
    /// Fit a selective SPN to a model and report the best ELBO.
    Fit {
        /// Polynomial text file or UAI MARKOV file.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 64)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        #[arg(long, env = "CIRCUIT_VI_SEED", default_value_t = 0)]
        seed: u64,
        /// Wall-clock budget in seconds shared by all restarts.
        #[arg(long)]
        time_budget: Option<f64>,
        /// Importance-sampling estimate of ln Z with this many samples.
        #[arg(long)]
        importance: Option<usize>,
        /// RunRecord JSON output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-iteration trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Exact ln Z by enumeration or transfer matrix.
    Oracle {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = OracleMethod::Enum)]
        method: OracleMethod,
        #[arg(long, requires = "cols")]
        rows: Option<usize>,
        #[arg(long, requires = "rows")]
        cols: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid of experiments from a TOML config, appending JSONL records.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Results file; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Positive,
    Mixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMethod {
    Enum,
    Transfer,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn emit(out: Option<&Path>, json: String) -> Result<()> {
    match out {
        Some(path) => write_file(path, &(json + "\n")),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenIsing { rows, cols, gamma, mode, seed, out, uai } => {
            let mode = match mode {
                Mode::Positive => CouplingMode::Positive,
                Mode::Mixed => CouplingMode::Mixed,
            };
            let poly = gen_ising(&IsingSpec { rows, cols, gamma, mode, seed })?;
            write_file(&out, &(model::grid_comment(rows, cols) + &poly.to_text()))?;
            if let Some(path) = uai {
                write_file(&path, &polynomial_to_factor_graph(&poly)?.to_uai())?;
            }
            println!("vars {} terms {}", poly.num_vars(), poly.len());
        }
        Command::Fit { model, k, restarts, iters, lr, seed, time_budget, importance, out, trace } => {
            let budget = time_budget
                .map(|s| {
                    Duration::try_from_secs_f64(s)
                        .map_err(|_| CliError::Usage(format!("invalid --time-budget {s}")))
                })
                .transpose()?;
            let loaded = model::load(&model)?;
            let settings = FitSettings { k, restarts, iters, lr, seed, time_budget: budget, importance };
            let (rec, result) = fit_run(&loaded.poly, &model.display().to_string(), &settings)?;
            if let Some(path) = trace {
                write_file(&path, &result.trace_csv())?;
            }
            emit(out.as_deref(), serde_json::to_string_pretty(&rec)?)?;
            let aborted = result.traces.iter().filter(|t| t.aborted.is_some()).count();
            if aborted > 0 {
                eprintln!("{aborted} of {restarts} restarts aborted on non-finite values");
            }
        }
        Command::Oracle { model, method, rows, cols, out } => {
            let loaded = model::load(&model)?;
            let method = match method {
                OracleMethod::Enum => RunMethod::OracleEnum,
                OracleMethod::Transfer => RunMethod::OracleTransfer,
            };
            let grid = rows.zip(cols).or(loaded.grid);
            let (_, report) = oracle_run(&loaded.poly, &model.display().to_string(), method, grid)?;
            emit(out.as_deref(), serde_json::to_string_pretty(&report)?)?;
        }
        Command::Sweep { config, out, jobs } => {
            if jobs == 0 {
                return Err(CliError::Usage("--jobs must be at least 1".into()));
            }
            let cfg = sweep::SweepConfig::load(&config)?;
            let output = out
                .or_else(|| {
                    cfg.output
                        .as_ref()
                        .map(|o| config.parent().unwrap_or(Path::new(".")).join(o))
                })
                .ok_or_else(|| CliError::Usage("no results file: pass --out or set `output`".into()))?;
            let s = sweep::run(&cfg, &output, jobs)?;
            eprintln!(
                "{} cells: {} already complete, {} run, {} failed",
                s.total, s.skipped, s.ran, s.failed
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
