//! Exact reference values by brute force, for testing the fast passes.
//!
//! Nothing here goes through the circuit expectation or entropy recursions:
//! circuit quantities come from enumerating `q(x)` with
//! [`Circuit::evaluate`], and polynomials are evaluated from per-term
//! bit masks. All sums over assignments are accumulated in log space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::math::{logaddexp, logsumexp, xlogx};
use crate::polynomial::{Monomial, Polynomial};

/// Largest polynomial enumerated by [`exact_log_partition`].
pub const ENUMERATION_VAR_CAP: usize = 25;
/// Largest circuit enumerated by the circuit oracles.
pub const CIRCUIT_VAR_CAP: usize = 20;
/// Widest grid accepted by [`grid_log_partition`].
pub const TRANSFER_WIDTH_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    LogPartition,
    Entropy,
    Expectation,
    Elbo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Enumeration,
    TransferMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: Quantity,
    pub value: f64,
    pub method: Method,
    pub states_visited: u64,
}

fn cap(what: &'static str, size: usize, cap: usize) -> Result<()> {
    if size > cap {
        return Err(Error::SizeCap { what, size, cap });
    }
    Ok(())
}

/// Bit masks over assignment indices; bit `v` set means `x_v = -1`.
struct MaskedTerms {
    terms: Vec<(u32, f64)>,
}

impl MaskedTerms {
    fn new(poly: &Polynomial) -> Self {
        Self {
            terms: poly
                .terms()
                .iter()
                .map(|t| (t.vars().iter().fold(0u32, |m, &v| m | 1 << v), t.coefficient))
                .collect(),
        }
    }

    fn value(&self, bits: u32) -> f64 {
        self.terms
            .iter()
            .map(|&(mask, c)| if (mask & bits).count_ones() % 2 == 0 { c } else { -c })
            .sum()
    }
}

fn assignment(bits: u64, n: usize) -> Vec<i8> {
    (0..n).map(|v| if bits >> v & 1 == 1 { -1 } else { 1 }).collect()
}

/// `ln sum_x exp(v(x))` over all `2^n` assignments.
pub fn exact_log_partition(poly: &Polynomial) -> Result<f64> {
    let n = poly.num_vars();
    cap("enumeration", n, ENUMERATION_VAR_CAP)?;
    let terms = MaskedTerms::new(poly);
    let total = 1u64 << n;
    let chunk = 1u64 << 12.min(n);
    // Fixed chunking and in-order reduction keep the result deterministic.
    let partials: Vec<f64> = (0..total / chunk)
        .into_par_iter()
        .map(|c| {
            let mut acc = f64::NEG_INFINITY;
            let mut max = f64::NEG_INFINITY;
            let mut sum = 0.0;
            for bits in c * chunk..(c + 1) * chunk {
                let v = terms.value(bits as u32);
                if v > max {
                    sum = sum * (max - v).exp() + 1.0;
                    max = v;
                } else {
                    sum += (v - max).exp();
                }
            }
            if max > f64::NEG_INFINITY {
                acc = max + sum.ln();
            }
            acc
        })
        .collect();
    Ok(logsumexp(&partials))
}

pub fn log_partition_report(poly: &Polynomial) -> Result<OracleReport> {
    Ok(OracleReport {
        quantity: Quantity::LogPartition,
        value: exact_log_partition(poly)?,
        method: Method::Enumeration,
        states_visited: 1u64 << poly.num_vars(),
    })
}

/// `ln Z` of a grid model by a site-by-site transfer-matrix sweep over
/// `2^width` frontier states, `width = min(rows, cols)`.
///
/// Variable `r * cols + c` is site `(r, c)`. Accepted terms: constants,
/// single-site fields and couplings between 4-neighbours.
pub fn grid_log_partition(rows: usize, cols: usize, poly: &Polynomial) -> Result<f64> {
    if rows == 0 || cols == 0 {
        return Err(Error::NotAGrid("empty grid".into()));
    }
    if poly.num_vars() != rows * cols {
        return Err(Error::NotAGrid(format!(
            "{} variables do not form a {rows}x{cols} grid",
            poly.num_vars()
        )));
    }
    let width = rows.min(cols);
    cap("transfer-matrix width", width, TRANSFER_WIDTH_CAP)?;

    // Sweep along the longer side; (sr, sc) are sweep coordinates.
    let transpose = cols > rows;
    let (srows, scols) = if transpose { (cols, rows) } else { (rows, cols) };
    let to_var = |sr: usize, sc: usize| {
        if transpose {
            sc * cols + sr
        } else {
            sr * cols + sc
        }
    };
    let mut to_sweep = vec![0usize; rows * cols];
    for sr in 0..srows {
        for sc in 0..scols {
            to_sweep[to_var(sr, sc)] = sr * scols + sc;
        }
    }

    let n = rows * cols;
    let mut field = vec![0.0; n];
    let mut left = vec![0.0; n];
    let mut up = vec![0.0; n];
    let mut constant = 0.0;
    for t in poly.terms() {
        match *t.vars() {
            [] => constant += t.coefficient,
            [v] => field[to_sweep[v]] += t.coefficient,
            [a, b] => {
                let (a, b) = (to_sweep[a].min(to_sweep[b]), to_sweep[a].max(to_sweep[b]));
                if b == a + 1 && b % scols != 0 {
                    left[b] += t.coefficient;
                } else if b == a + scols {
                    up[b] += t.coefficient;
                } else {
                    return Err(Error::NotAGrid(format!(
                        "term over {:?} couples non-adjacent sites",
                        t.vars()
                    )));
                }
            }
            _ => {
                return Err(Error::NotAGrid(format!(
                    "term over {:?} has degree above 2",
                    t.vars()
                )))
            }
        }
    }

    let w = scols;
    let states = 1usize << w;
    let mask = states - 1;
    let spin = |bit: usize| if bit == 1 { -1.0 } else { 1.0 };
    // Bit 0 of a state is the most recent site, bit w-1 the one directly above
    // the next site.
    let mut alpha = vec![f64::NEG_INFINITY; states];
    alpha[0] = 0.0;
    let mut next = vec![f64::NEG_INFINITY; states];
    for sr in 0..srows {
        for sc in 0..scols {
            let i = sr * scols + sc;
            for (t, out) in next.iter_mut().enumerate() {
                let xs = spin(t & 1);
                let mut acc = f64::NEG_INFINITY;
                for o in 0..2 {
                    let s = ((t >> 1) | (o << (w - 1))) & mask;
                    let prev = alpha[s];
                    if prev == f64::NEG_INFINITY {
                        continue;
                    }
                    let mut e = prev + field[i] * xs;
                    if sc > 0 {
                        e += left[i] * xs * spin(s & 1);
                    }
                    if sr > 0 {
                        e += up[i] * xs * spin(o);
                    }
                    acc = logaddexp(acc, e);
                }
                *out = acc;
            }
            std::mem::swap(&mut alpha, &mut next);
        }
    }
    Ok(logsumexp(&alpha) + constant)
}

pub fn grid_report(rows: usize, cols: usize, poly: &Polynomial) -> Result<OracleReport> {
    Ok(OracleReport {
        quantity: Quantity::LogPartition,
        value: grid_log_partition(rows, cols, poly)?,
        method: Method::TransferMatrix,
        states_visited: (rows * cols) as u64 * (1u64 << rows.min(cols)),
    })
}

/// `q(x)` for every assignment, indexed by bit pattern.
fn circuit_table(circuit: &Circuit) -> Result<Vec<f64>> {
    let n = circuit.num_vars();
    cap("circuit enumeration", n, CIRCUIT_VAR_CAP)?;
    (0..1u64 << n)
        .map(|bits| circuit.evaluate(&assignment(bits, n)))
        .collect()
}

pub fn exact_entropy(circuit: &Circuit) -> Result<f64> {
    Ok(-circuit_table(circuit)?.into_iter().map(xlogx).sum::<f64>())
}

pub fn exact_expectation(circuit: &Circuit, term: &Monomial) -> Result<f64> {
    let n = circuit.num_vars();
    let poly = Polynomial::new(n, vec![term.clone()])?;
    let terms = MaskedTerms::new(&poly);
    Ok(circuit_table(circuit)?
        .into_iter()
        .enumerate()
        .map(|(bits, q)| q * terms.value(bits as u32))
        .sum())
}

/// `sum_x q(x) v(x) + H(q)` by enumeration.
pub fn exact_elbo(circuit: &Circuit, poly: &Polynomial) -> Result<f64> {
    let poly = crate::elbo::lift(circuit, poly)?;
    let terms = MaskedTerms::new(&poly);
    let table = circuit_table(circuit)?;
    let mut expectation = 0.0;
    let mut entropy = 0.0;
    for (bits, &q) in table.iter().enumerate() {
        if q > 0.0 {
            expectation += q * terms.value(bits as u32);
            entropy -= xlogx(q);
        }
    }
    Ok(expectation + entropy)
}
