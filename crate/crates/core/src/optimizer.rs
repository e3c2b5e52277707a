//! Multi-restart Adam ascent on the exact ELBO.
//!
//! Every ELBO value evaluated along the way is a valid lower bound on
//! `ln Z`, so the reported bound is the best value seen in any iteration of
//! any restart, not the final iterate.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{random_params, Circuit, Node};
use crate::elbo::{ElboPlan, ElboWorkspace};
use crate::error::{Error, Result};
use crate::math::logsumexp;
use crate::polynomial::Polynomial;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub iters: usize,
    pub restarts: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Stop a restart once its best ELBO improved by less than
    /// `tol * |best|` over the last `window` iterations. Zero disables it.
    pub tol: f64,
    pub window: usize,
    /// Wall-clock budget shared by all restarts.
    pub time_budget: Option<Duration>,
    pub seed: u64,
    /// Standard deviation of the per-restart initial logits.
    pub init_scale: f64,
    /// Run restarts on the rayon pool. Results do not depend on this flag.
    pub parallel: bool,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            iters: 2000,
            restarts: 1,
            lr: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            tol: 1e-7,
            window: 50,
            time_budget: None,
            seed: 0,
            init_scale: crate::builder::DEFAULT_INIT_SCALE,
            parallel: true,
        }
    }
}

impl OptConfig {
    fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.iters == 0 {
            return bad("iters must be at least 1");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(self.tol >= 0.0) {
            return bad("tol must be non-negative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be finite and non-negative");
        }
        Ok(())
    }

    /// Seed of restart `r`.
    pub fn restart_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iter: usize,
    pub elbo: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub seed: u64,
    pub points: Vec<TracePoint>,
    /// Best finite ELBO of this restart, `-inf` if there was none.
    pub best_elbo: f64,
    /// Why the restart stopped early because of a non-finite value.
    pub aborted: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub best_params: Vec<f64>,
    pub best_elbo: f64,
    pub best_restart: usize,
    pub traces: Vec<RestartTrace>,
    pub wall_time: Duration,
    pub seed: u64,
}

impl FitResult {
    /// CSV with header `restart,iter,elbo,wall_ms`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("restart,iter,elbo,wall_ms\n");
        for t in &self.traces {
            for p in &t.points {
                out.push_str(&format!("{},{},{:.17e},{:.3}\n", t.restart, p.iter, p.elbo, p.wall_ms));
            }
        }
        out
    }
}

struct RestartOutcome {
    trace: RestartTrace,
    best_params: Option<Vec<f64>>,
}

/// Maximizes the ELBO of `structure` against `poly` (minus `offset`).
pub fn fit(structure: &Circuit, poly: &Polynomial, offset: f64, config: &OptConfig) -> Result<FitResult> {
    config.check()?;
    let poly = crate::elbo::lift(structure, poly)?;
    let plan = ElboPlan::new(structure, &poly)?;
    let start = Instant::now();
    let deadline = config.time_budget.map(|b| start + b);

    let run = |r: usize| run_restart(structure, &plan, offset, config, r, start, deadline);
    let outcomes: Vec<RestartOutcome> = if config.parallel {
        (0..config.restarts).into_par_iter().map(run).collect()
    } else {
        (0..config.restarts).map(run).collect()
    };

    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    let mut traces = Vec::with_capacity(outcomes.len());
    for (r, outcome) in outcomes.into_iter().enumerate() {
        if let Some(params) = outcome.best_params {
            let e = outcome.trace.best_elbo;
            if best.as_ref().is_none_or(|(_, b, _)| e > *b) {
                best = Some((r, e, params));
            }
        }
        traces.push(outcome.trace);
    }
    let (best_restart, best_elbo, best_params) =
        best.ok_or(Error::AllRestartsFailed(config.restarts))?;
    Ok(FitResult {
        best_params,
        best_elbo,
        best_restart,
        traces,
        wall_time: start.elapsed(),
        seed: config.seed,
    })
}

fn run_restart(
    structure: &Circuit,
    plan: &ElboPlan,
    offset: f64,
    config: &OptConfig,
    restart: usize,
    start: Instant,
    deadline: Option<Instant>,
) -> RestartOutcome {
    let seed = config.restart_seed(restart);
    let mut trace = RestartTrace {
        restart,
        seed,
        points: Vec::new(),
        best_elbo: f64::NEG_INFINITY,
        aborted: None,
    };
    // Restart 0 always gets at least one evaluation so a fit never returns
    // empty-handed because of the budget.
    if restart > 0 && deadline.is_some_and(|d| Instant::now() >= d) {
        return RestartOutcome {
            trace,
            best_params: None,
        };
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = random_params(structure.num_params(), &mut rng, config.init_scale);
    let mut ws = ElboWorkspace::new(plan);
    let mut grad = vec![0.0; params.len()];
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let mut best_params = None;
    let mut history: VecDeque<f64> = VecDeque::with_capacity(config.window + 1);
    let (mut b1t, mut b2t) = (1.0, 1.0);

    for iter in 0..config.iters {
        let value = match plan.evaluate(structure, &params, offset, &mut ws, Some(&mut grad)) {
            Ok(b) => b.total,
            Err(e) => {
                trace.aborted = Some(e.to_string());
                break;
            }
        };
        if !value.is_finite() {
            trace.aborted = Some(format!("non-finite ELBO at iteration {iter}"));
            break;
        }
        trace.points.push(TracePoint {
            iter,
            elbo: value,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if value > trace.best_elbo {
            trace.best_elbo = value;
            best_params = Some(params.clone());
        }
        if grad.iter().any(|g| !g.is_finite()) {
            trace.aborted = Some(format!("non-finite gradient at iteration {iter}"));
            break;
        }

        if config.tol > 0.0 && config.window > 0 {
            history.push_back(trace.best_elbo);
            if history.len() > config.window {
                let old = history.pop_front().unwrap();
                if trace.best_elbo - old <= config.tol * trace.best_elbo.abs() {
                    break;
                }
            }
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }

        b1t *= config.beta1;
        b2t *= config.beta2;
        for i in 0..params.len() {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
            let mh = m[i] / (1.0 - b1t);
            let vh = v[i] / (1.0 - b2t);
            params[i] += config.lr * mh / (vh.sqrt() + config.eps);
        }
    }
    RestartOutcome { trace, best_params }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEstimate {
    /// `ln` of the Monte Carlo mean of `w(x) / q(x)`, `x ~ q`.
    pub log_z: f64,
    /// Delta-method standard error of `log_z`.
    pub std_err: f64,
    pub samples: usize,
}

/// `log2` of the number of assignments with non-zero probability; exact for
/// selective circuits.
fn log2_support(circuit: &Circuit) -> f64 {
    let mut lc = vec![0.0f64; circuit.len()];
    for (i, node) in circuit.nodes().iter().enumerate() {
        lc[i] = match node {
            Node::Literal { .. } => 0.0,
            Node::Bernoulli { .. } => 1.0,
            Node::Product { children } => children.iter().map(|c| lc[c.index()]).sum(),
            Node::Sum { children, .. } => {
                let ln: Vec<f64> = children
                    .iter()
                    .map(|c| lc[c.index()] * std::f64::consts::LN_2)
                    .collect();
                logsumexp(&ln) / std::f64::consts::LN_2
            }
        };
    }
    lc[circuit.root().index()]
}

/// Importance-sampling estimate of `ln Z` with proposal `q = circuit`.
/// Diagnostic only: unlike the ELBO it is not a bound.
pub fn importance_estimate(
    circuit: &Circuit,
    poly: &Polynomial,
    samples: usize,
    seed: u64,
) -> Result<ImportanceEstimate> {
    if samples == 0 {
        return Err(Error::InvalidConfig("samples must be at least 1".into()));
    }
    if circuit.is_empty() {
        return Err(Error::InvalidCircuit("circuit has no nodes".into()));
    }
    let poly = crate::elbo::lift(circuit, poly)?;
    let support = log2_support(circuit);
    if (support - circuit.num_vars() as f64).abs() > 1e-9 {
        return Err(Error::InvalidCircuit(format!(
            "proposal covers 2^{support:.3} of 2^{} assignments",
            circuit.num_vars()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = circuit.weights(circuit.params());
    let mut log_w = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = circuit.sample_prepared(&weights, &mut rng)?;
        log_w.push(poly.evaluate(&x)? - circuit.log_evaluate(&x)?);
    }
    let n = samples as f64;
    let log_z = logsumexp(&log_w) - n.ln();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let mean = scaled.iter().sum::<f64>() / n;
    let var = if samples > 1 {
        scaled.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(ImportanceEstimate {
        log_z,
        std_err: var.sqrt() / (n.sqrt() * mean),
        samples,
    })
}
