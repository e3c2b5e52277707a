//! Line-based circuit format:
//!
//! ```text
//! SPN <num_nodes> <num_vars>
//! L <var> <sign>            literal leaf, sign is 1 or -1
//! B <var> <logit>           Bernoulli leaf
//! P <child> <child> ...     product
//! S <child>:<logit> ...     sum
//! ```
//!
//! Nodes are listed in topological order and the last one is the root.
//! Logits are written with 17 significant digits, so parsing the output
//! reproduces the parameters bit for bit.

use std::fmt::Write as _;

use super::{Circuit, Node, NodeId};
use crate::error::{Error, ParseError, ParseErrorKind, Result};

fn malformed(line: usize, msg: impl Into<String>) -> Error {
    ParseError::at_line(ParseErrorKind::MalformedLine(msg.into()), line).into()
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| ParseError::at_line(ParseErrorKind::InvalidNumber(tok.into()), line).into())
}

impl Circuit {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "SPN {} {}", self.nodes.len(), self.num_vars).unwrap();
        for node in &self.nodes {
            match *node {
                Node::Literal { var, positive } => {
                    writeln!(out, "L {var} {}", if positive { 1 } else { -1 }).unwrap()
                }
                Node::Bernoulli { var, param } => {
                    writeln!(out, "B {var} {:.16e}", self.params[param]).unwrap()
                }
                Node::Product { ref children } => {
                    out.push('P');
                    for c in children {
                        write!(out, " {}", c.0).unwrap();
                    }
                    out.push('\n');
                }
                Node::Sum {
                    ref children,
                    first_param,
                } => {
                    out.push('S');
                    for (j, c) in children.iter().enumerate() {
                        write!(out, " {}:{:.16e}", c.0, self.params[first_param + j]).unwrap();
                    }
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| ParseError::at_line(ParseErrorKind::UnexpectedEof("header"), 1))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 || h[0] != "SPN" {
            return Err(malformed(hline, "expected `SPN <num_nodes> <num_vars>`"));
        }
        let num_nodes: usize = parse_num(h[1], hline)?;
        let num_vars: usize = parse_num(h[2], hline)?;
        let mut circuit = Circuit::new(num_vars);
        let invalid = |line: usize, e: Error| -> Error {
            ParseError::at_line(ParseErrorKind::InvalidNode(e.to_string()), line).into()
        };
        for (line, body) in lines {
            let mut toks = body.split_whitespace();
            let kind = toks.next().unwrap_or_default();
            let rest: Vec<&str> = toks.collect();
            match kind {
                "L" => {
                    if rest.len() != 2 {
                        return Err(malformed(line, "expected `L <var> <sign>`"));
                    }
                    let var = parse_num(rest[0], line)?;
                    let positive = match rest[1] {
                        "1" | "+1" => true,
                        "-1" => false,
                        other => return Err(malformed(line, format!("bad sign {other:?}"))),
                    };
                    circuit
                        .add_literal(var, positive)
                        .map_err(|e| invalid(line, e))?;
                }
                "B" => {
                    if rest.len() != 2 {
                        return Err(malformed(line, "expected `B <var> <logit>`"));
                    }
                    let var = parse_num(rest[0], line)?;
                    let logit: f64 = parse_num(rest[1], line)?;
                    circuit
                        .add_bernoulli(var, logit)
                        .map_err(|e| invalid(line, e))?;
                }
                "P" => {
                    let children = rest
                        .iter()
                        .map(|t| parse_num(t, line).map(NodeId))
                        .collect::<Result<Vec<_>>>()?;
                    circuit
                        .add_product(children)
                        .map_err(|e| invalid(line, e))?;
                }
                "S" => {
                    let mut children = Vec::with_capacity(rest.len());
                    let mut logits = Vec::with_capacity(rest.len());
                    for t in &rest {
                        let (c, l) = t
                            .split_once(':')
                            .ok_or_else(|| malformed(line, format!("expected child:logit, got {t:?}")))?;
                        children.push(NodeId(parse_num(c, line)?));
                        logits.push(parse_num(l, line)?);
                    }
                    circuit
                        .add_sum(children, logits)
                        .map_err(|e| invalid(line, e))?;
                }
                other => return Err(malformed(line, format!("unknown node kind {other:?}"))),
            }
        }
        if circuit.len() != num_nodes {
            return Err(ParseError::at_line(
                ParseErrorKind::NodeCountMismatch {
                    expected: num_nodes,
                    got: circuit.len(),
                },
                hline,
            )
            .into());
        }
        Ok(circuit)
    }
}
