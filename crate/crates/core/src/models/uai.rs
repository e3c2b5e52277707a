//! Reader and writer for `MARKOV` networks in the UAI competition format,
//! restricted to binary variables and strictly positive tables.
//!
//! ```text
//! MARKOV
//! <n>
//! <card_0> ... <card_{n-1}>
//! <m>
//! <size> <v_1> ... <v_size>        (m scope lines)
//! <count> <e_1> ... <e_count>      (m tables, last scope variable fastest)
//! ```

use std::fmt::Write as _;

use crate::error::{ParseError, ParseErrorKind, Result};
use crate::polynomial::{Polynomial, MAX_TABLE_SCOPE};

#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub scope: Vec<usize>,
    pub table: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorGraph {
    pub num_vars: usize,
    pub cardinalities: Vec<usize>,
    pub factors: Vec<Factor>,
}

struct Tokens<'a> {
    toks: Vec<&'a str>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self, what: &'static str) -> Result<(usize, &'a str), ParseError> {
        let tok = self
            .toks
            .get(self.pos)
            .ok_or_else(|| ParseError::at_token(ParseErrorKind::UnexpectedEof(what), self.pos))?;
        self.pos += 1;
        Ok((self.pos - 1, tok))
    }

    fn usize(&mut self, what: &'static str) -> Result<(usize, usize), ParseError> {
        let (pos, tok) = self.next(what)?;
        tok.parse()
            .map(|v| (pos, v))
            .map_err(|_| ParseError::at_token(ParseErrorKind::InvalidNumber(tok.into()), pos))
    }

    fn f64(&mut self, what: &'static str) -> Result<(usize, f64), ParseError> {
        let (pos, tok) = self.next(what)?;
        tok.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(|v| (pos, v))
            .ok_or_else(|| ParseError::at_token(ParseErrorKind::InvalidNumber(tok.into()), pos))
    }
}

pub fn parse_uai(text: &str) -> Result<FactorGraph, ParseError> {
    let mut t = Tokens {
        toks: text.split_whitespace().collect(),
        pos: 0,
    };
    let (pos, header) = t.next("network type")?;
    if header != "MARKOV" {
        return Err(ParseError::at_token(ParseErrorKind::BadHeader(header.into()), pos));
    }
    let (_, num_vars) = t.usize("variable count")?;
    let mut cardinalities = Vec::with_capacity(num_vars.min(1 << 16));
    for _ in 0..num_vars {
        let (pos, card) = t.usize("cardinality")?;
        if card != 2 {
            return Err(ParseError::at_token(ParseErrorKind::UnsupportedCardinality(card), pos));
        }
        cardinalities.push(card);
    }
    let (_, num_factors) = t.usize("factor count")?;
    let mut scopes = Vec::with_capacity(num_factors.min(1 << 16));
    for _ in 0..num_factors {
        let (pos, size) = t.usize("scope size")?;
        if size > MAX_TABLE_SCOPE {
            return Err(ParseError::at_token(ParseErrorKind::ScopeTooLarge(size), pos));
        }
        let mut scope = Vec::with_capacity(size);
        for _ in 0..size {
            let (pos, var) = t.usize("scope variable")?;
            if var >= num_vars {
                return Err(ParseError::at_token(
                    ParseErrorKind::VariableOutOfRange { var, num_vars },
                    pos,
                ));
            }
            if scope.contains(&var) {
                return Err(ParseError::at_token(ParseErrorKind::DuplicateScopeVariable(var), pos));
            }
            scope.push(var);
        }
        scopes.push(scope);
    }
    let mut factors = Vec::with_capacity(scopes.len());
    for scope in scopes {
        let expected = 1usize << scope.len();
        let (pos, count) = t.usize("table size")?;
        if count != expected {
            return Err(ParseError::at_token(
                ParseErrorKind::TableSizeMismatch { expected, got: count },
                pos,
            ));
        }
        let mut table = Vec::with_capacity(expected);
        for _ in 0..expected {
            let (pos, v) = t.f64("table entry")?;
            if v <= 0.0 {
                return Err(ParseError::at_token(ParseErrorKind::NonPositiveEntry(v), pos));
            }
            table.push(v);
        }
        factors.push(Factor { scope, table });
    }
    if let Some(&tok) = t.toks.get(t.pos) {
        return Err(ParseError::at_token(ParseErrorKind::TrailingTokens(tok.into()), t.pos));
    }
    Ok(FactorGraph {
        num_vars,
        cardinalities,
        factors,
    })
}

impl FactorGraph {
    pub fn to_uai(&self) -> String {
        let mut out = String::from("MARKOV\n");
        writeln!(out, "{}", self.num_vars).unwrap();
        let cards: Vec<String> = self.cardinalities.iter().map(|c| c.to_string()).collect();
        writeln!(out, "{}", cards.join(" ")).unwrap();
        writeln!(out, "{}", self.factors.len()).unwrap();
        for f in &self.factors {
            write!(out, "{}", f.scope.len()).unwrap();
            for v in &f.scope {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        for f in &self.factors {
            writeln!(out, "\n{}", f.table.len()).unwrap();
            let entries: Vec<String> = f.table.iter().map(|e| format!("{e:.16e}")).collect();
            writeln!(out, "{}", entries.join(" ")).unwrap();
        }
        out
    }

    /// `prod_f phi_f(x)` for `x` in {-1, +1}^n.
    pub fn product(&self, x: &[i8]) -> f64 {
        self.factors
            .iter()
            .map(|f| {
                let index = f
                    .scope
                    .iter()
                    .fold(0usize, |acc, &v| (acc << 1) | usize::from(x[v] < 0));
                f.table[index]
            })
            .product()
    }
}

/// Sum of the Fourier expansions of every factor, canonicalized, so that
/// `exp(v(x)) = prod_f phi_f(x)`.
pub fn factor_graph_to_polynomial(fg: &FactorGraph) -> Result<Polynomial> {
    let mut poly = Polynomial::zero(fg.num_vars);
    for f in &fg.factors {
        poly.extend(Polynomial::from_factor_table(fg.num_vars, &f.scope, &f.table)?);
    }
    Ok(poly.canonicalize())
}

/// One factor per non-constant monomial with table `exp(c prod x)`; the
/// constant term is folded into the first factor (or a unary factor on
/// variable 0 when there is none).
pub fn polynomial_to_factor_graph(poly: &Polynomial) -> Result<FactorGraph> {
    let n = poly.num_vars();
    let mut constant = 0.0;
    let mut factors = Vec::new();
    for t in poly.terms() {
        let d = t.degree();
        if d == 0 {
            constant += t.coefficient;
            continue;
        }
        if d > MAX_TABLE_SCOPE {
            return Err(crate::error::Error::SizeCap {
                what: "dense factor table",
                size: d,
                cap: MAX_TABLE_SCOPE,
            });
        }
        let table = (0..1usize << d)
            .map(|s| {
                let sign = if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                sign * t.coefficient
            })
            .collect::<Vec<f64>>();
        factors.push((t.vars().to_vec(), table));
    }
    if constant != 0.0 && n > 0 {
        if factors.is_empty() {
            factors.push((vec![0], vec![0.0, 0.0]));
        }
        for e in &mut factors[0].1 {
            *e += constant;
        }
    }
    Ok(FactorGraph {
        num_vars: n,
        cardinalities: vec![2; n],
        factors: factors
            .into_iter()
            .map(|(scope, log_table)| Factor {
                scope,
                table: log_table.into_iter().map(f64::exp).collect(),
            })
            .collect(),
    })
}
