//! Grid sweeps over Ising instances with one JSONL record per cell.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use circuit_vi::{gen_ising, CouplingMode, IsingSpec};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::record::{RunMethod, RunRecord};
use crate::runs::{fit_run, oracle_run, FitSettings};

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// JSONL results file, relative to the config file.
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub fit: FitDefaults,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    /// `[rows, cols]` pairs.
    #[serde(default)]
    pub sizes: Vec<[usize; 2]>,
    #[serde(default)]
    pub gammas: Vec<f64>,
    #[serde(default = "default_modes")]
    pub modes: Vec<CouplingMode>,
    #[serde(default)]
    pub methods: Vec<RunMethod>,
    /// Size budgets for `spn` and `importance` cells.
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

fn default_modes() -> Vec<CouplingMode> {
    vec![CouplingMode::Mixed]
}

fn default_ks() -> Vec<usize> {
    vec![64]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitDefaults {
    pub restarts: usize,
    pub iters: usize,
    pub lr: f64,
    /// Seconds per fit.
    pub time_budget: Option<f64>,
    pub importance_samples: usize,
}

impl Default for FitDefaults {
    fn default() -> Self {
        Self {
            restarts: 10,
            iters: 2000,
            lr: 0.05,
            time_budget: None,
            importance_samples: 10_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub rows: usize,
    pub cols: usize,
    pub gamma: f64,
    pub mode: CouplingMode,
    pub seed: u64,
    pub method: RunMethod,
    pub k: Option<usize>,
}

impl Cell {
    pub fn instance(&self) -> String {
        format!("ising-{}x{}-{}-g{}-s{}", self.rows, self.cols, self.mode, self.gamma, self.seed)
    }

    pub fn key(&self) -> String {
        match self.k {
            Some(k) => format!("{}/{}/k{k}", self.instance(), self.method.name()),
            None => format!("{}/{}", self.instance(), self.method.name()),
        }
    }
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn cells(&self) -> Vec<Cell> {
        let g = &self.grid;
        let mut cells = Vec::new();
        for &[rows, cols] in &g.sizes {
            for &gamma in &g.gammas {
                for &mode in &g.modes {
                    for &seed in &g.seeds {
                        for &method in &g.methods {
                            let ks: Vec<Option<usize>> = match method {
                                RunMethod::Mf => vec![Some(1)],
                                m if m.uses_k() => g.ks.iter().map(|&k| Some(k)).collect(),
                                _ => vec![None],
                            };
                            for k in ks {
                                cells.push(Cell { rows, cols, gamma, mode, seed, method, k });
                            }
                        }
                    }
                }
            }
        }
        cells
    }
}

fn run_cell(cell: &Cell, fit: &FitDefaults) -> RunRecord {
    let start = Instant::now();
    let outcome = (|| -> Result<RunRecord> {
        let spec = IsingSpec {
            rows: cell.rows,
            cols: cell.cols,
            gamma: cell.gamma,
            mode: cell.mode,
            seed: cell.seed,
        };
        let poly = gen_ising(&spec)?;
        let instance = cell.instance();
        match cell.method {
            RunMethod::OracleEnum | RunMethod::OracleTransfer => {
                Ok(oracle_run(&poly, &instance, cell.method, Some((cell.rows, cell.cols)))?.0)
            }
            RunMethod::Mf | RunMethod::Spn | RunMethod::Importance => {
                let settings = FitSettings {
                    k: cell.k.unwrap_or(1),
                    restarts: fit.restarts,
                    iters: fit.iters,
                    lr: fit.lr,
                    seed: cell.seed,
                    time_budget: fit.time_budget.map(Duration::from_secs_f64),
                    importance: (cell.method == RunMethod::Importance).then_some(fit.importance_samples),
                };
                Ok(fit_run(&poly, &instance, &settings)?.0)
            }
        }
    })();
    let mut rec = outcome.unwrap_or_else(|e| {
        let mut rec = RunRecord::new(cell.method, cell.instance());
        rec.k = cell.k;
        rec.seed = Some(cell.seed);
        rec.error = Some(e.to_string());
        rec.wall_ms = start.elapsed().as_secs_f64() * 1e3;
        rec
    });
    rec.key = Some(cell.key());
    rec
}

/// Keys of successfully completed cells. Unparseable lines (an interrupted
/// write) are ignored.
fn completed_keys(path: &Path) -> Result<HashSet<String>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(HashSet::new()),
        Err(e) => return Err(CliError::io(path, e)),
    };
    let mut keys = HashSet::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if let Ok(rec) = serde_json::from_str::<RunRecord>(&line) {
            if let (Some(key), None) = (rec.key, rec.error) {
                keys.insert(key);
            }
        }
    }
    Ok(keys)
}

fn open_for_append(path: &Path) -> Result<File> {
    let mut file = OpenOptions::new()
        .create(true)
        .read(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::io(path, e))?;
    let len = file.metadata().map_err(|e| CliError::io(path, e))?.len();
    if len > 0 {
        // finish a line cut short by an interrupted run
        let mut last = [0u8];
        file.seek(SeekFrom::Start(len - 1)).map_err(|e| CliError::io(path, e))?;
        file.read_exact(&mut last).map_err(|e| CliError::io(path, e))?;
        if last[0] != b'\n' {
            file.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
        }
    }
    Ok(file)
}

pub struct SweepSummary {
    pub total: usize,
    pub skipped: usize,
    pub ran: usize,
    pub failed: usize,
}

pub fn run(config: &SweepConfig, output: &Path, jobs: usize) -> Result<SweepSummary> {
    let cells = config.cells();
    let done = completed_keys(output)?;
    let todo: Vec<&Cell> = cells.iter().filter(|c| !done.contains(&c.key())).collect();
    let file = Mutex::new(open_for_append(output)?);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} jobs: {e}")))?;
    let failed = pool.install(|| {
        todo.par_iter()
            .map(|cell| -> Result<bool> {
                let rec = run_cell(cell, &config.fit);
                let mut line = serde_json::to_string(&rec)?;
                line.push('\n');
                let mut f = file.lock().unwrap_or_else(|p| p.into_inner());
                f.write_all(line.as_bytes()).map_err(|e| CliError::io(output, e))?;
                f.flush().map_err(|e| CliError::io(output, e))?;
                Ok(rec.error.is_some())
            })
            .collect::<Result<Vec<bool>>>()
    })?;
    Ok(SweepSummary {
        total: cells.len(),
        skipped: cells.len() - todo.len(),
        ran: todo.len(),
        failed: failed.into_iter().filter(|&f| f).count(),
    })
}
