use std::fmt;

use super::{Circuit, Node, NodeId};
use crate::error::{Error, Result};
use crate::varset::VarSet;

/// Largest variable count for which exhaustive selectivity checking runs.
pub const EXHAUSTIVE_VAR_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValidationMode {
    /// Topological order, smoothness, decomposability and root scope from
    /// the cached scopes.
    Structural,
    /// Structural checks plus selectivity by enumerating every assignment.
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Empty,
    ChildOrder { node: NodeId, child: NodeId },
    NotSmooth { node: NodeId },
    NotDecomposable { node: NodeId },
    NotSelective { node: NodeId, assignment: Vec<i8> },
    RootScope { missing: Vec<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "circuit is empty"),
            Violation::ChildOrder { node, child } => {
                write!(f, "node {} has child {} that does not precede it", node.0, child.0)
            }
            Violation::NotSmooth { node } => write!(f, "sum node {} is not smooth", node.0),
            Violation::NotDecomposable { node } => {
                write!(f, "product node {} is not decomposable", node.0)
            }
            Violation::NotSelective { node, assignment } => write!(
                f,
                "sum node {} has several non-zero children at {:?}",
                node.0, assignment
            ),
            Violation::RootScope { missing } => {
                write!(f, "root scope misses variables {missing:?}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn is_selective(&self) -> bool {
        !self
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NotSelective { .. }))
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl Circuit {
    pub fn validate(&self, mode: ValidationMode) -> Result<ValidityReport> {
        if mode == ValidationMode::Exhaustive && self.num_vars > EXHAUSTIVE_VAR_CAP {
            return Err(Error::SizeCap {
                what: "exhaustive selectivity check",
                size: self.num_vars,
                cap: EXHAUSTIVE_VAR_CAP,
            });
        }
        let mut report = ValidityReport::default();
        if self.nodes.is_empty() {
            report.violations.push(Violation::Empty);
            return Ok(report);
        }
        self.check_structure(&mut report);
        if mode == ValidationMode::Exhaustive && report.is_valid() {
            self.check_selectivity(&mut report);
        }
        Ok(report)
    }

    fn check_structure(&self, report: &mut ValidityReport) {
        for (i, node) in self.nodes.iter().enumerate() {
            let id = NodeId(i);
            if let Some(&child) = node.children().iter().find(|c| c.0 >= i) {
                report.violations.push(Violation::ChildOrder { node: id, child });
                continue;
            }
            match node {
                Node::Sum { children, .. } => {
                    let first = self.scope_ids[children[0].0];
                    if children.iter().any(|c| self.scope_ids[c.0] != first) {
                        report.violations.push(Violation::NotSmooth { node: id });
                    }
                }
                Node::Product { children } => {
                    let mut seen = VarSet::empty(self.num_vars);
                    for c in children {
                        let s = self.scope(*c);
                        if !seen.is_disjoint(s) {
                            report.violations.push(Violation::NotDecomposable { node: id });
                            break;
                        }
                        seen.union_with(s);
                    }
                }
                _ => {}
            }
        }
        let root_scope = self.scope(self.root());
        let missing: Vec<usize> = (0..self.num_vars)
            .filter(|&v| !root_scope.contains(v))
            .collect();
        if !missing.is_empty() {
            report.violations.push(Violation::RootScope { missing });
        }
    }

    fn check_selectivity(&self, report: &mut ValidityReport) {
        let n = self.num_vars;
        let weights = self.weights(&self.params);
        let mut flagged = vec![false; self.nodes.len()];
        let mut x = vec![1i8; n];
        for bits in 0u64..(1u64 << n) {
            for (v, xv) in x.iter_mut().enumerate() {
                *xv = if bits >> v & 1 == 1 { -1 } else { 1 };
            }
            let value = self.forward_values(&weights, &self.params, &x);
            for (i, node) in self.nodes.iter().enumerate() {
                if flagged[i] {
                    continue;
                }
                if let Node::Sum { children, .. } = node {
                    let nonzero = children.iter().filter(|c| value[c.0] > 0.0).count();
                    if nonzero > 1 {
                        flagged[i] = true;
                        report.violations.push(Violation::NotSelective {
                            node: NodeId(i),
                            assignment: x.clone(),
                        });
                    }
                }
            }
        }
    }
}
