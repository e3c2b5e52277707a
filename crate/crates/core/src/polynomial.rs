//! Multilinear polynomials over {-1, +1}^n used as unnormalized log-densities.
//!
//! `v(x) = sum_f c_f prod_{i in f} x_i`, and the target density is
//! `w(x) = exp(v(x))`. Any positive factor table converts to this form by its
//! Fourier (Walsh) expansion, see [`Polynomial::from_factor_table`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, ParseError, ParseErrorKind, Result};

/// Coefficients with magnitude below this are treated as zero.
pub const DEFAULT_DROP_THRESHOLD: f64 = 1e-12;

/// Largest factor scope accepted for dense table conversion.
pub const MAX_TABLE_SCOPE: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coefficient: f64,
    vars: Vec<usize>,
}

impl Monomial {
    /// Builds `coefficient * prod x_i`, sorting `vars` and cancelling repeated
    /// variables in pairs (`x_i^2 = 1` on {-1, +1}).
    pub fn new(coefficient: f64, mut vars: Vec<usize>) -> Self {
        vars.sort_unstable();
        let mut reduced: Vec<usize> = Vec::with_capacity(vars.len());
        for v in vars {
            if reduced.last() == Some(&v) {
                reduced.pop();
            } else {
                reduced.push(v);
            }
        }
        Self {
            coefficient,
            vars: reduced,
        }
    }

    pub fn constant(coefficient: f64) -> Self {
        Self {
            coefficient,
            vars: Vec::new(),
        }
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn degree(&self) -> usize {
        self.vars.len()
    }

    /// Value at `x`; does no bounds checking beyond slice indexing.
    pub fn evaluate(&self, x: &[i8]) -> f64 {
        let negatives = self.vars.iter().filter(|&&v| x[v] < 0).count();
        if negatives % 2 == 0 {
            self.coefficient
        } else {
            -self.coefficient
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    num_vars: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(num_vars: usize, terms: Vec<Monomial>) -> Result<Self> {
        if let Some(var) = terms.iter().flat_map(|t| t.vars.iter()).find(|&&v| v >= num_vars) {
            return Err(Error::VariableOutOfRange {
                var: *var,
                num_vars,
            });
        }
        Ok(Self { num_vars, terms })
    }

    pub fn zero(num_vars: usize) -> Self {
        Self {
            num_vars,
            terms: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, term: Monomial) -> Result<()> {
        if let Some(&var) = term.vars.iter().find(|&&v| v >= self.num_vars) {
            return Err(Error::VariableOutOfRange {
                var,
                num_vars: self.num_vars,
            });
        }
        self.terms.push(term);
        Ok(())
    }

    /// Appends all terms of `other`; the result spans the larger variable count.
    pub fn extend(&mut self, other: Polynomial) {
        self.num_vars = self.num_vars.max(other.num_vars);
        self.terms.extend(other.terms);
    }

    /// Same terms over a larger variable set (extra variables unused).
    pub fn with_num_vars(mut self, num_vars: usize) -> Result<Self> {
        if num_vars < self.num_vars {
            if let Some(var) = self.max_var().filter(|&v| v >= num_vars) {
                return Err(Error::VariableOutOfRange { var, num_vars });
            }
        }
        self.num_vars = num_vars;
        Ok(self)
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.iter().filter_map(|t| t.vars.last().copied()).max()
    }

    /// `v(x)`.
    pub fn evaluate(&self, x: &[i8]) -> Result<f64> {
        if x.len() != self.num_vars {
            return Err(Error::AssignmentLength {
                expected: self.num_vars,
                got: x.len(),
            });
        }
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, &v)| v != 1 && v != -1) {
            return Err(Error::AssignmentValue { index, value });
        }
        Ok(self.terms.iter().map(|t| t.evaluate(x)).sum())
    }

    pub fn canonicalize(&self) -> Polynomial {
        self.canonicalize_with(DEFAULT_DROP_THRESHOLD)
    }

    /// Merges terms over identical variable sets and drops coefficients with
    /// magnitude below `threshold`. Terms come out ordered by variable list.
    pub fn canonicalize_with(&self, threshold: f64) -> Polynomial {
        let mut merged: BTreeMap<&[usize], f64> = BTreeMap::new();
        for t in &self.terms {
            *merged.entry(&t.vars).or_insert(0.0) += t.coefficient;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| c.abs() >= threshold)
            .map(|(vars, coefficient)| Monomial {
                coefficient,
                vars: vars.to_vec(),
            })
            .collect();
        Polynomial {
            num_vars: self.num_vars,
            terms,
        }
    }

    /// Fourier expansion of `ln table` over the factor's scope.
    ///
    /// `table` has `2^d` entries for a scope of `d` variables, with the last
    /// scope variable changing fastest; state `s` maps to `x = 1 - 2s`.
    /// Terms with `|c| < 1e-12` are dropped.
    pub fn from_factor_table(num_vars: usize, scope: &[usize], table: &[f64]) -> Result<Polynomial> {
        let d = scope.len();
        if d > MAX_TABLE_SCOPE {
            return Err(Error::SizeCap {
                what: "dense factor table",
                size: d,
                cap: MAX_TABLE_SCOPE,
            });
        }
        if let Some(&var) = scope.iter().find(|&&v| v >= num_vars) {
            return Err(Error::VariableOutOfRange { var, num_vars });
        }
        let mut sorted = scope.to_vec();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(ParseError::at_token(ParseErrorKind::DuplicateScopeVariable(w[0]), 0).into());
        }
        let size = 1usize << d;
        if table.len() != size {
            return Err(ParseError::at_token(
                ParseErrorKind::TableSizeMismatch {
                    expected: size,
                    got: table.len(),
                },
                0,
            )
            .into());
        }
        if let Some((index, &value)) = table.iter().enumerate().find(|(_, &v)| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::NonPositivePotential { index, value });
        }

        // Bit (d - 1 - j) of a table index is the state of scope[j]. The
        // in-place Walsh-Hadamard transform yields, at subset mask S,
        // sum_t ln(table[t]) * (-1)^{|S & t|} = sum_x ln phi(x) prod_{j in S} x_j.
        let mut coeffs: Vec<f64> = table.iter().map(|v| v.ln()).collect();
        let mut h = 1;
        while h < size {
            for block in (0..size).step_by(2 * h) {
                for i in block..block + h {
                    let (a, b) = (coeffs[i], coeffs[i + h]);
                    coeffs[i] = a + b;
                    coeffs[i + h] = a - b;
                }
            }
            h *= 2;
        }
        let norm = 1.0 / size as f64;
        let mut terms = Vec::new();
        for (mask, c) in coeffs.into_iter().enumerate() {
            let c = c * norm;
            if c.abs() < DEFAULT_DROP_THRESHOLD {
                continue;
            }
            let vars = (0..d)
                .filter(|&j| mask >> (d - 1 - j) & 1 == 1)
                .map(|j| scope[j])
                .collect();
            terms.push(Monomial::new(c, vars));
        }
        Ok(Polynomial { num_vars, terms })
    }

    /// One term per line: `<coefficient> <var>...`, preceded by a
    /// `# num_vars <n>` comment so unused variables survive a round trip.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# num_vars {}", self.num_vars).unwrap();
        for t in &self.terms {
            write!(out, "{:.16e}", t.coefficient).unwrap();
            for v in &t.vars {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`Polynomial::to_text`] output. Without a `# num_vars` line the
    /// variable count is one past the largest index used.
    pub fn from_text(text: &str) -> Result<Polynomial> {
        let mut declared = None;
        let mut terms = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let mut toks = comment.split_whitespace();
                if toks.next() == Some("num_vars") {
                    let tok = toks.next().unwrap_or_default();
                    declared = Some(tok.parse::<usize>().map_err(|_| {
                        ParseError::at_line(ParseErrorKind::InvalidNumber(tok.into()), lineno)
                    })?);
                }
                continue;
            }
            let mut toks = line.split_whitespace();
            let ctok = toks.next().unwrap_or_default();
            let coefficient: f64 = ctok
                .parse()
                .ok()
                .filter(|c: &f64| c.is_finite())
                .ok_or_else(|| ParseError::at_line(ParseErrorKind::InvalidNumber(ctok.into()), lineno))?;
            let vars = toks
                .map(|t| {
                    t.parse::<usize>().map_err(|_| {
                        ParseError::at_line(ParseErrorKind::InvalidNumber(t.into()), lineno)
                    })
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if let Some(n) = declared {
                if let Some(&var) = vars.iter().find(|&&v| v >= n) {
                    return Err(ParseError::at_line(
                        ParseErrorKind::VariableOutOfRange { var, num_vars: n },
                        lineno,
                    )
                    .into());
                }
            }
            terms.push(Monomial::new(coefficient, vars));
        }
        let used = terms
            .iter()
            .filter_map(|t| t.vars.last().map(|v| v + 1))
            .max()
            .unwrap_or(0);
        Polynomial::new(declared.unwrap_or(used), terms)
    }
}
