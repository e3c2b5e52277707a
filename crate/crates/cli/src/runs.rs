use std::time::{Duration, Instant};

use circuit_vi::oracle::{grid_report, log_partition_report};
use circuit_vi::{build, fit, importance_estimate, BuildConfig, FitResult, OptConfig, OracleReport, Polynomial};

use crate::error::{CliError, Result};
use crate::record::{RunMethod, RunRecord};

#[derive(Clone, Debug)]
pub struct FitSettings {
    pub k: usize,
    pub restarts: usize,
    pub iters: usize,
    pub lr: f64,
    pub seed: u64,
    pub time_budget: Option<Duration>,
    /// Samples for an importance estimate with the fitted circuit.
    pub importance: Option<usize>,
}

pub fn fit_run(poly: &Polynomial, instance: &str, s: &FitSettings) -> Result<(RunRecord, FitResult)> {
    let start = Instant::now();
    if poly.num_vars() == 0 {
        return Err(CliError::Usage("model has no variables".into()));
    }
    let built = build(&BuildConfig::new(poly.num_vars(), s.k).seed(s.seed))?;
    let cfg = OptConfig {
        iters: s.iters,
        restarts: s.restarts,
        lr: s.lr,
        seed: s.seed,
        time_budget: s.time_budget,
        ..Default::default()
    };
    let result = fit(&built.circuit, poly, built.padding.elbo_offset, &cfg)?;
    let method = match (s.importance, s.k) {
        (Some(_), _) => RunMethod::Importance,
        (None, 1) => RunMethod::Mf,
        (None, _) => RunMethod::Spn,
    };
    let mut rec = RunRecord::new(method, instance);
    rec.k = Some(s.k);
    rec.restarts = Some(s.restarts);
    rec.iters = Some(s.iters);
    rec.elbo = Some(result.best_elbo);
    rec.seed = Some(s.seed);
    if let Some(samples) = s.importance {
        let mut c = built.circuit.clone();
        c.set_params(result.best_params.clone())?;
        let est = importance_estimate(&c, poly, samples, s.seed)?;
        // the estimate targets the padded model
        rec.log_z = Some(est.log_z - built.padding.elbo_offset);
        rec.std_err = Some(est.std_err);
    }
    rec.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((rec.sanitized(), result))
}

pub fn oracle_run(
    poly: &Polynomial,
    instance: &str,
    method: RunMethod,
    grid: Option<(usize, usize)>,
) -> Result<(RunRecord, OracleReport)> {
    let start = Instant::now();
    let report = match method {
        RunMethod::OracleEnum => log_partition_report(poly)?,
        RunMethod::OracleTransfer => {
            let (rows, cols) = grid.ok_or_else(|| {
                CliError::Usage("the transfer method needs --rows and --cols (or a `# grid` header)".into())
            })?;
            grid_report(rows, cols, poly)?
        }
        other => return Err(CliError::Usage(format!("{} is not an oracle method", other.name()))),
    };
    let mut rec = RunRecord::new(method, instance);
    rec.log_z = Some(report.value);
    rec.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((rec.sanitized(), report))
}
