//! Probabilistic circuits over binary variables taking values in {-1, +1}.
//!
//! A [`Circuit`] is a node array in topological order (every child index is
//! strictly smaller than its parent's); the last node is the root. Sum-node
//! weights and Bernoulli-leaf means are stored as unconstrained logits in a
//! single flat parameter vector, mapped through softmax and sigmoid
//! respectively. Passes that only depend on the parameters (entropy, the
//! ELBO, evaluation) also have `*_with` variants that take an explicit
//! parameter slice, so several parameter vectors can share one structure.

mod text;
mod validate;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use validate::{ValidationMode, ValidityReport, Violation, EXHAUSTIVE_VAR_CAP};

use crate::error::{Error, Result};
use crate::math::{log_sigmoid, logsumexp, sigmoid, xlogx};
use crate::varset::VarSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    /// Weighted mixture. Child `j` owns parameter `first_param + j`.
    Sum {
        children: Vec<NodeId>,
        first_param: usize,
    },
    Product {
        children: Vec<NodeId>,
    },
    /// Deterministic indicator `[x_var == sign]`.
    Literal { var: usize, positive: bool },
    /// `P(x_var = +1) = sigmoid(params[param])`.
    Bernoulli { var: usize, param: usize },
}

impl Node {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Sum { children, .. } | Node::Product { children } => children,
            Node::Literal { .. } | Node::Bernoulli { .. } => &[],
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Literal { .. } | Node::Bernoulli { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CircuitSize {
    pub nodes: usize,
    /// Total child edges; the usual measure of circuit size.
    pub edges: usize,
}

/// Sum-node weights and Bernoulli `P(x = +1)` values, aligned with the
/// parameter vector, together with their logarithms.
#[derive(Clone, Debug)]
pub(crate) struct Weights {
    pub prob: Vec<f64>,
    pub log_prob: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Circuit {
    num_vars: usize,
    nodes: Vec<Node>,
    params: Vec<f64>,
    scope_ids: Vec<u32>,
    scopes: Vec<VarSet>,
    scope_index: HashMap<VarSet, u32>,
}

impl Circuit {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            nodes: Vec::new(),
            params: Vec::new(),
            scope_ids: Vec::new(),
            scopes: Vec::new(),
            scope_index: HashMap::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The last node. Panics on an empty circuit.
    pub fn root(&self) -> NodeId {
        NodeId(self.nodes.len() - 1)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        self.check_params(&params)?;
        self.params = params;
        Ok(())
    }

    pub fn scope(&self, id: NodeId) -> &VarSet {
        &self.scopes[self.scope_ids[id.0] as usize]
    }

    /// Interned scope id; two nodes have equal scopes iff their ids match.
    pub fn scope_id(&self, id: NodeId) -> u32 {
        self.scope_ids[id.0]
    }

    pub fn size(&self) -> CircuitSize {
        CircuitSize {
            nodes: self.nodes.len(),
            edges: self.nodes.iter().map(|n| n.children().len()).sum(),
        }
    }

    pub fn add_literal(&mut self, var: usize, positive: bool) -> Result<NodeId> {
        self.check_var(var)?;
        let scope = VarSet::singleton(self.num_vars, var);
        Ok(self.push(Node::Literal { var, positive }, scope))
    }

    pub fn add_bernoulli(&mut self, var: usize, logit: f64) -> Result<NodeId> {
        self.check_var(var)?;
        let param = self.params.len();
        self.params.push(logit);
        let scope = VarSet::singleton(self.num_vars, var);
        Ok(self.push(Node::Bernoulli { var, param }, scope))
    }

    pub fn add_product(&mut self, children: Vec<NodeId>) -> Result<NodeId> {
        let scope = self.union_scope(&children)?;
        Ok(self.push(Node::Product { children }, scope))
    }

    pub fn add_sum(&mut self, children: Vec<NodeId>, logits: Vec<f64>) -> Result<NodeId> {
        if logits.len() != children.len() {
            return Err(Error::InvalidCircuit(format!(
                "sum node has {} children but {} logits",
                children.len(),
                logits.len()
            )));
        }
        let scope = self.union_scope(&children)?;
        let first_param = self.params.len();
        self.params.extend(logits);
        Ok(self.push(
            Node::Sum {
                children,
                first_param,
            },
            scope,
        ))
    }

    fn check_var(&self, var: usize) -> Result<()> {
        if var >= self.num_vars {
            return Err(Error::VariableOutOfRange {
                var,
                num_vars: self.num_vars,
            });
        }
        Ok(())
    }

    fn union_scope(&self, children: &[NodeId]) -> Result<VarSet> {
        if children.is_empty() {
            return Err(Error::InvalidCircuit(format!(
                "internal node {} has no children",
                self.nodes.len()
            )));
        }
        let mut scope = VarSet::empty(self.num_vars);
        for &c in children {
            if c.0 >= self.nodes.len() {
                return Err(Error::InvalidCircuit(format!(
                    "node {} references child {} which does not precede it",
                    self.nodes.len(),
                    c.0
                )));
            }
            scope.union_with(self.scope(c));
        }
        Ok(scope)
    }

    fn push(&mut self, node: Node, scope: VarSet) -> NodeId {
        let next = self.scopes.len() as u32;
        let id = *self.scope_index.entry(scope).or_insert_with_key(|s| {
            self.scopes.push(s.clone());
            next
        });
        self.scope_ids.push(id);
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::InvalidCircuit(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        Ok(())
    }

    fn check_nonempty(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidCircuit("circuit has no nodes".into()));
        }
        Ok(())
    }

    pub(crate) fn check_assignment(&self, x: &[i8]) -> Result<()> {
        if x.len() != self.num_vars {
            return Err(Error::AssignmentLength {
                expected: self.num_vars,
                got: x.len(),
            });
        }
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, &v)| v != 1 && v != -1) {
            return Err(Error::AssignmentValue { index, value });
        }
        Ok(())
    }

    pub(crate) fn weights(&self, params: &[f64]) -> Weights {
        let mut prob = vec![0.0; params.len()];
        let mut log_prob = vec![0.0; params.len()];
        for node in &self.nodes {
            match *node {
                Node::Sum {
                    ref children,
                    first_param,
                } => {
                    let range = first_param..first_param + children.len();
                    let lse = logsumexp(&params[range.clone()]);
                    for p in range {
                        log_prob[p] = params[p] - lse;
                        prob[p] = log_prob[p].exp();
                    }
                }
                Node::Bernoulli { param, .. } => {
                    prob[param] = sigmoid(params[param]);
                    log_prob[param] = log_sigmoid(params[param]);
                }
                _ => {}
            }
        }
        Weights { prob, log_prob }
    }

    /// Normalized weights of a sum node under the current parameters.
    pub fn sum_weights(&self, id: NodeId) -> Option<Vec<f64>> {
        match &self.nodes[id.0] {
            Node::Sum {
                children,
                first_param,
            } => {
                let logits = &self.params[*first_param..*first_param + children.len()];
                let lse = logsumexp(logits);
                Some(logits.iter().map(|l| (l - lse).exp()).collect())
            }
            _ => None,
        }
    }

    /// Redraws every parameter i.i.d. from `N(0, scale^2)`.
    pub fn randomize_params<R: Rng + ?Sized>(&mut self, rng: &mut R, scale: f64) {
        self.params = random_params(self.params.len(), rng, scale);
    }

    pub fn evaluate(&self, x: &[i8]) -> Result<f64> {
        self.evaluate_with(&self.params, x)
    }

    /// `g_root(x)` by one bottom-up pass.
    pub fn evaluate_with(&self, params: &[f64], x: &[i8]) -> Result<f64> {
        self.check_nonempty()?;
        self.check_params(params)?;
        self.check_assignment(x)?;
        let weights = self.weights(params);
        Ok(self.forward_values(&weights, params, x)[self.root().0])
    }

    pub(crate) fn forward_values(&self, weights: &Weights, params: &[f64], x: &[i8]) -> Vec<f64> {
        let mut value = vec![0.0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            value[i] = match *node {
                Node::Literal { var, positive } => {
                    if (x[var] > 0) == positive {
                        1.0
                    } else {
                        0.0
                    }
                }
                Node::Bernoulli { var, param } => {
                    if x[var] > 0 {
                        weights.prob[param]
                    } else {
                        sigmoid(-params[param])
                    }
                }
                Node::Product { ref children } => children.iter().map(|c| value[c.0]).product(),
                Node::Sum {
                    ref children,
                    first_param,
                } => children
                    .iter()
                    .enumerate()
                    .map(|(j, c)| weights.prob[first_param + j] * value[c.0])
                    .sum(),
            };
        }
        value
    }

    pub fn log_evaluate(&self, x: &[i8]) -> Result<f64> {
        self.log_evaluate_with(&self.params, x)
    }

    /// `ln g_root(x)` computed in log space; `-inf` exactly when every path
    /// to the root passes through a contradicted literal.
    pub fn log_evaluate_with(&self, params: &[f64], x: &[i8]) -> Result<f64> {
        self.check_nonempty()?;
        self.check_params(params)?;
        self.check_assignment(x)?;
        let weights = self.weights(params);
        let mut value = vec![0.0; self.nodes.len()];
        let mut terms = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            value[i] = match *node {
                Node::Literal { var, positive } => {
                    if (x[var] > 0) == positive {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                }
                Node::Bernoulli { var, param } => {
                    if x[var] > 0 {
                        weights.log_prob[param]
                    } else {
                        log_sigmoid(-params[param])
                    }
                }
                Node::Product { ref children } => children.iter().map(|c| value[c.0]).sum(),
                Node::Sum {
                    ref children,
                    first_param,
                } => {
                    terms.clear();
                    terms.extend(
                        children
                            .iter()
                            .enumerate()
                            .map(|(j, c)| weights.log_prob[first_param + j] + value[c.0]),
                    );
                    logsumexp(&terms)
                }
            };
        }
        Ok(value[self.root().0])
    }

    /// Draws one assignment with a generator seeded from `seed`.
    pub fn sample(&self, seed: u64) -> Result<Vec<i8>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng)
    }

    /// Top-down ancestral sampling: one child per sum node, all children of
    /// a product node.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<i8>> {
        self.check_nonempty()?;
        let weights = self.weights(&self.params);
        self.sample_prepared(&weights, rng)
    }

    pub(crate) fn sample_prepared<R: Rng + ?Sized>(
        &self,
        weights: &Weights,
        rng: &mut R,
    ) -> Result<Vec<i8>> {
        let mut x = vec![0i8; self.num_vars];
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            match self.nodes[id.0] {
                Node::Literal { var, positive } => x[var] = if positive { 1 } else { -1 },
                Node::Bernoulli { var, param } => {
                    x[var] = if rng.random::<f64>() < weights.prob[param] {
                        1
                    } else {
                        -1
                    };
                }
                Node::Product { ref children } => stack.extend(children.iter().rev()),
                Node::Sum {
                    ref children,
                    first_param,
                } => {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut chosen = children[children.len() - 1];
                    for (j, &c) in children.iter().enumerate() {
                        acc += weights.prob[first_param + j];
                        if u < acc {
                            chosen = c;
                            break;
                        }
                    }
                    stack.push(chosen);
                }
            }
        }
        if let Some(var) = x.iter().position(|&v| v == 0) {
            return Err(Error::InvalidCircuit(format!(
                "sampling left variable {var} unassigned; root scope is incomplete"
            )));
        }
        Ok(x)
    }

    pub fn entropy(&self) -> f64 {
        self.entropy_with(&self.params)
    }

    /// Entropy of the root distribution in nats by the selective recursion
    /// `H_sum = sum_j a_j (H_j - ln a_j)`, `H_prod = sum_j H_j`. Only exact
    /// for selective, decomposable circuits; on a non-selective circuit the
    /// result is an upper bound.
    pub fn entropy_with(&self, params: &[f64]) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        let weights = self.weights(params);
        self.node_entropies(&weights)[self.root().0]
    }

    pub(crate) fn node_entropies(&self, weights: &Weights) -> Vec<f64> {
        let mut h = vec![0.0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            h[i] = match *node {
                Node::Literal { .. } => 0.0,
                Node::Bernoulli { param, .. } => {
                    let p = weights.prob[param];
                    -xlogx(p) - xlogx(1.0 - p)
                }
                Node::Product { ref children } => children.iter().map(|c| h[c.0]).sum(),
                Node::Sum {
                    ref children,
                    first_param,
                } => children
                    .iter()
                    .enumerate()
                    .map(|(j, c)| {
                        let a = weights.prob[first_param + j];
                        if a == 0.0 {
                            0.0
                        } else {
                            a * (h[c.0] - weights.log_prob[first_param + j])
                        }
                    })
                    .sum(),
            };
        }
        h
    }

    /// Parent counts per node (roots and unreachable nodes have zero).
    pub fn parent_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.nodes.len()];
        for node in &self.nodes {
            for c in node.children() {
                counts[c.0] += 1;
            }
        }
        counts
    }
}

pub fn random_params<R: Rng + ?Sized>(len: usize, rng: &mut R, scale: f64) -> Vec<f64> {
    if scale <= 0.0 {
        return vec![0.0; len];
    }
    let normal = Normal::new(0.0, scale).expect("finite positive scale");
    (0..len).map(|_| normal.sample(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> Circuit {
        let mut c = Circuit::new(n);
        let leaves: Vec<_> = (0..n).map(|v| c.add_bernoulli(v, 0.0).unwrap()).collect();
        c.add_product(leaves).unwrap();
        c
    }

    fn two_point_mixture() -> Circuit {
        // 0.3 * [x = +1] + 0.7 * [x = -1]
        let mut c = Circuit::new(1);
        let pos = c.add_literal(0, true).unwrap();
        let neg = c.add_literal(0, false).unwrap();
        c.add_sum(vec![pos, neg], vec![0.3f64.ln(), 0.7f64.ln()])
            .unwrap();
        c
    }

    #[test]
    fn uniform_evaluates_to_one_eighth() {
        let c = uniform(3);
        for x in [[1, 1, 1], [-1, 1, -1], [-1, -1, -1]] {
            assert!((c.evaluate(&x).unwrap() - 0.125).abs() < 1e-15);
            assert!((c.log_evaluate(&x).unwrap() - (0.125f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_evaluates_weight() {
        let c = two_point_mixture();
        assert!((c.evaluate(&[-1]).unwrap() - 0.7).abs() < 1e-12);
        assert!((c.evaluate(&[1]).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn contradicted_literal_is_neg_infinity() {
        let mut c = Circuit::new(1);
        c.add_literal(0, true).unwrap();
        assert_eq!(c.log_evaluate(&[-1]).unwrap(), f64::NEG_INFINITY);
        assert_eq!(c.evaluate(&[-1]).unwrap(), 0.0);
        assert_eq!(c.sample(7).unwrap(), vec![1]);
    }

    #[test]
    fn assignment_errors() {
        let c = uniform(3);
        assert!(matches!(
            c.evaluate(&[1, 1]),
            Err(Error::AssignmentLength { expected: 3, got: 2 })
        ));
        assert!(matches!(
            c.log_evaluate(&[1, 0, 1]),
            Err(Error::AssignmentValue { index: 1, value: 0 })
        ));
    }

    #[test]
    fn entropy_examples() {
        let c = uniform(5);
        assert!((c.entropy() - 5.0 * std::f64::consts::LN_2).abs() < 1e-12);
        let m = two_point_mixture();
        let expected = -(0.3f64 * 0.3f64.ln()) - 0.7 * 0.7f64.ln();
        assert!((m.entropy() - expected).abs() < 1e-12);
        assert!((expected - 0.6109).abs() < 1e-4);
    }

    #[test]
    fn size_counts_edges() {
        let mut c = Circuit::new(1);
        c.add_bernoulli(0, 0.0).unwrap();
        assert_eq!(c.size(), CircuitSize { nodes: 1, edges: 0 });
        assert_eq!(two_point_mixture().size(), CircuitSize { nodes: 3, edges: 2 });
    }

    #[test]
    fn rejects_forward_references_and_empty_children() {
        let mut c = Circuit::new(2);
        let a = c.add_literal(0, true).unwrap();
        assert!(c.add_product(vec![a, NodeId(5)]).is_err());
        assert!(c.add_product(vec![]).is_err());
        assert!(c.add_literal(2, true).is_err());
        assert!(c.add_sum(vec![a], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn scopes_are_interned() {
        let mut c = Circuit::new(2);
        let a = c.add_literal(0, true).unwrap();
        let b = c.add_literal(0, false).unwrap();
        let d = c.add_bernoulli(1, 0.0).unwrap();
        assert_eq!(c.scope_id(a), c.scope_id(b));
        assert_ne!(c.scope_id(a), c.scope_id(d));
        let p = c.add_product(vec![a, d]).unwrap();
        assert_eq!(c.scope(p).len(), 2);
    }
}
