//! Exact ELBO of a selective, decomposable circuit against a polynomial
//! log-density, and its exact gradient.
//!
//! The ELBO splits into one expectation per monomial plus the circuit
//! entropy. A monomial's expectation only depends on nodes whose scope meets
//! its variables (every other node has expectation 1), so each monomial's
//! forward and adjoint passes are restricted to the ancestors of its leaves.
//! The entropy pass and its adjoint visit every node once.

use crate::circuit::{Circuit, Node, Weights};
use crate::error::{Error, Result};
use crate::polynomial::{Monomial, Polynomial};

#[derive(Clone, Debug, PartialEq)]
pub struct ElboBreakdown {
    /// `E_q[f]` for each term, coefficient included, in polynomial order.
    pub expectation_terms: Vec<f64>,
    pub entropy: f64,
    pub offset: f64,
    /// `sum(expectation_terms) + entropy - offset`.
    pub total: f64,
}

impl ElboBreakdown {
    pub fn expectation(&self) -> f64 {
        self.expectation_terms.iter().sum()
    }
}

/// Structure-dependent data for repeated ELBO evaluations of one
/// (circuit structure, polynomial) pair. Parameters are supplied per call.
#[derive(Clone, Debug)]
pub struct ElboPlan {
    num_nodes: usize,
    num_params: usize,
    coefficients: Vec<f64>,
    /// Ascending node indices whose scope meets each term.
    touched: Vec<Vec<u32>>,
}

/// Scratch buffers for [`ElboPlan::evaluate`]; one per thread.
#[derive(Clone, Debug)]
pub struct ElboWorkspace {
    expect: Vec<f64>,
    adjoint: Vec<f64>,
    stamp: Vec<u32>,
    entropy_adjoint: Vec<f64>,
}

impl ElboWorkspace {
    pub fn new(plan: &ElboPlan) -> Self {
        Self {
            expect: vec![1.0; plan.num_nodes],
            adjoint: vec![0.0; plan.num_nodes],
            stamp: vec![0; plan.num_nodes],
            entropy_adjoint: vec![0.0; plan.num_nodes],
        }
    }
}

fn check_term(circuit: &Circuit, term: &Monomial) -> Result<()> {
    let root_scope = circuit.scope(circuit.root());
    for &v in term.vars() {
        if v >= circuit.num_vars() {
            return Err(Error::VariableOutOfRange {
                var: v,
                num_vars: circuit.num_vars(),
            });
        }
        if !root_scope.contains(v) {
            return Err(Error::VariableNotInScope { var: v });
        }
    }
    Ok(())
}

impl ElboPlan {
    pub fn new(circuit: &Circuit, poly: &Polynomial) -> Result<Self> {
        if circuit.is_empty() {
            return Err(Error::InvalidCircuit("circuit has no nodes".into()));
        }
        for t in poly.terms() {
            check_term(circuit, t)?;
        }
        let m = circuit.len();

        // Parent lists in CSR form, and the leaves of every variable.
        let mut parent_start = vec![0u32; m + 1];
        for node in circuit.nodes() {
            for c in node.children() {
                parent_start[c.index() + 1] += 1;
            }
        }
        for i in 0..m {
            parent_start[i + 1] += parent_start[i];
        }
        let mut fill = parent_start.clone();
        let mut parents = vec![0u32; parent_start[m] as usize];
        for (i, node) in circuit.nodes().iter().enumerate() {
            for c in node.children() {
                parents[fill[c.index()] as usize] = i as u32;
                fill[c.index()] += 1;
            }
        }
        let mut leaves_by_var: Vec<Vec<u32>> = vec![Vec::new(); circuit.num_vars()];
        for (i, node) in circuit.nodes().iter().enumerate() {
            if let Node::Literal { var, .. } | Node::Bernoulli { var, .. } = *node {
                leaves_by_var[var].push(i as u32);
            }
        }

        let mut mark = vec![u32::MAX; m];
        let mut stack = Vec::new();
        let mut touched = Vec::with_capacity(poly.len());
        for (t, term) in poly.terms().iter().enumerate() {
            let mut list = Vec::new();
            for &v in term.vars() {
                for &leaf in &leaves_by_var[v] {
                    stack.push(leaf);
                }
            }
            while let Some(i) = stack.pop() {
                if mark[i as usize] == t as u32 {
                    continue;
                }
                mark[i as usize] = t as u32;
                list.push(i);
                let (s, e) = (parent_start[i as usize], parent_start[i as usize + 1]);
                stack.extend(&parents[s as usize..e as usize]);
            }
            list.sort_unstable();
            touched.push(list);
        }

        Ok(Self {
            num_nodes: m,
            num_params: circuit.num_params(),
            coefficients: poly.terms().iter().map(|t| t.coefficient).collect(),
            touched,
        })
    }

    pub fn num_terms(&self) -> usize {
        self.coefficients.len()
    }

    /// Total nodes visited by all monomial passes; the `t * m` work measure.
    pub fn work(&self) -> usize {
        self.touched.iter().map(Vec::len).sum()
    }

    /// ELBO under `params`. When `gradient` is given it is overwritten with
    /// the exact gradient of `total` with respect to every parameter.
    pub fn evaluate(
        &self,
        circuit: &Circuit,
        params: &[f64],
        offset: f64,
        ws: &mut ElboWorkspace,
        mut gradient: Option<&mut [f64]>,
    ) -> Result<ElboBreakdown> {
        if circuit.len() != self.num_nodes || params.len() != self.num_params {
            return Err(Error::InvalidCircuit(
                "circuit or parameters do not match the ELBO plan".into(),
            ));
        }
        if let Some(g) = gradient.as_deref_mut() {
            if g.len() != self.num_params {
                return Err(Error::InvalidCircuit(format!(
                    "gradient buffer has {} entries, expected {}",
                    g.len(),
                    self.num_params
                )));
            }
            g.fill(0.0);
        }
        let weights = circuit.weights(params);
        let root = circuit.root().index();
        let nodes = circuit.nodes();

        let mut expectation_terms = Vec::with_capacity(self.coefficients.len());
        for (t, (&coef, touched)) in self.coefficients.iter().zip(&self.touched).enumerate() {
            if touched.is_empty() {
                expectation_terms.push(coef);
                continue;
            }
            let stamp = t as u32 + 1;
            for &i in touched {
                ws.stamp[i as usize] = stamp;
            }
            for &i in touched {
                let i = i as usize;
                ws.expect[i] = match nodes[i] {
                    Node::Literal { positive, .. } => {
                        if positive {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                    Node::Bernoulli { param, .. } => 2.0 * weights.prob[param] - 1.0,
                    Node::Product { ref children } => {
                        children.iter().map(|c| ws.expect[c.index()]).product()
                    }
                    Node::Sum {
                        ref children,
                        first_param,
                    } => children
                        .iter()
                        .enumerate()
                        .map(|(j, c)| weights.prob[first_param + j] * ws.expect[c.index()])
                        .sum(),
                };
            }
            expectation_terms.push(coef * ws.expect[root]);

            if let Some(g) = gradient.as_deref_mut() {
                ws.adjoint[root] = coef;
                for &i in touched.iter().rev() {
                    let i = i as usize;
                    let adj = ws.adjoint[i];
                    if adj == 0.0 {
                        continue;
                    }
                    match nodes[i] {
                        Node::Literal { .. } => {}
                        Node::Bernoulli { param, .. } => {
                            let p = weights.prob[param];
                            g[param] += adj * 2.0 * p * (1.0 - p);
                        }
                        Node::Product { ref children } => {
                            self.product_adjoint(children, adj, stamp, ws);
                        }
                        Node::Sum {
                            ref children,
                            first_param,
                        } => {
                            let ei = ws.expect[i];
                            for (j, c) in children.iter().enumerate() {
                                let a = weights.prob[first_param + j];
                                let c = c.index();
                                g[first_param + j] += adj * a * (ws.expect[c] - ei);
                                if ws.stamp[c] == stamp {
                                    ws.adjoint[c] += a * adj;
                                }
                            }
                        }
                    }
                }
            }
            for &i in touched {
                ws.expect[i as usize] = 1.0;
                ws.adjoint[i as usize] = 0.0;
                ws.stamp[i as usize] = 0;
            }
        }

        let h = circuit.node_entropies(&weights);
        let entropy = h[root];
        if let Some(g) = gradient.as_deref_mut() {
            entropy_adjoint(circuit, params, &weights, &h, &mut ws.entropy_adjoint, g);
        }

        // Fixed summation order: terms in polynomial order, then entropy.
        let expectation: f64 = expectation_terms.iter().sum();
        Ok(ElboBreakdown {
            expectation_terms,
            entropy,
            offset,
            total: expectation + entropy - offset,
        })
    }

    fn product_adjoint(
        &self,
        children: &[crate::circuit::NodeId],
        adj: f64,
        stamp: u32,
        ws: &mut ElboWorkspace,
    ) {
        if children.len() == 2 {
            let (a, b) = (children[0].index(), children[1].index());
            let (ea, eb) = (ws.expect[a], ws.expect[b]);
            if ws.stamp[a] == stamp {
                ws.adjoint[a] += adj * eb;
            }
            if ws.stamp[b] == stamp {
                ws.adjoint[b] += adj * ea;
            }
            return;
        }
        // prod_{k != j} E_k via prefix and suffix products, safe for zeros.
        let n = children.len();
        let mut suffix = vec![1.0; n + 1];
        for j in (0..n).rev() {
            suffix[j] = suffix[j + 1] * ws.expect[children[j].index()];
        }
        let mut prefix = 1.0;
        for (j, c) in children.iter().enumerate() {
            let c = c.index();
            if ws.stamp[c] == stamp {
                ws.adjoint[c] += adj * prefix * suffix[j + 1];
            }
            prefix *= ws.expect[c];
        }
    }
}

/// Reverse pass through `H_sum = sum_j a_j (H_j - ln a_j)`,
/// `H_prod = sum_j H_j` and the Bernoulli leaf entropies.
fn entropy_adjoint(
    circuit: &Circuit,
    params: &[f64],
    weights: &Weights,
    h: &[f64],
    adjoint: &mut [f64],
    g: &mut [f64],
) {
    adjoint.fill(0.0);
    let root = circuit.root().index();
    adjoint[root] = 1.0;
    for (i, node) in circuit.nodes().iter().enumerate().rev() {
        let adj = adjoint[i];
        if adj == 0.0 {
            continue;
        }
        match *node {
            Node::Literal { .. } => {}
            Node::Bernoulli { param, .. } => {
                // dH/dl = -l p (1 - p)
                let p = weights.prob[param];
                g[param] += adj * (-params[param]) * p * (1.0 - p);
            }
            Node::Product { ref children } => {
                for c in children {
                    adjoint[c.index()] += adj;
                }
            }
            Node::Sum {
                ref children,
                first_param,
            } => {
                for (j, c) in children.iter().enumerate() {
                    let a = weights.prob[first_param + j];
                    let la = weights.log_prob[first_param + j];
                    let c = c.index();
                    if a > 0.0 {
                        g[first_param + j] += adj * a * (h[c] - la - h[i]);
                    }
                    adjoint[c] += adj * a;
                }
            }
        }
    }
}

/// `E_q[f]` for a single monomial, coefficient included.
pub fn expect_monomial(circuit: &Circuit, term: &Monomial) -> Result<f64> {
    let poly = Polynomial::new(circuit.num_vars(), vec![term.clone()])?;
    let plan = ElboPlan::new(circuit, &poly)?;
    let mut ws = ElboWorkspace::new(&plan);
    let b = plan.evaluate(circuit, circuit.params(), 0.0, &mut ws, None)?;
    Ok(b.expectation_terms[0])
}

pub(crate) fn lift(circuit: &Circuit, poly: &Polynomial) -> Result<Polynomial> {
    if poly.num_vars() > circuit.num_vars() {
        return Err(Error::InvalidCircuit(format!(
            "polynomial over {} variables does not fit a circuit over {}",
            poly.num_vars(),
            circuit.num_vars()
        )));
    }
    poly.clone().with_num_vars(circuit.num_vars())
}

pub fn elbo(circuit: &Circuit, poly: &Polynomial, offset: f64) -> Result<ElboBreakdown> {
    let poly = lift(circuit, poly)?;
    let plan = ElboPlan::new(circuit, &poly)?;
    let mut ws = ElboWorkspace::new(&plan);
    plan.evaluate(circuit, circuit.params(), offset, &mut ws, None)
}

pub fn elbo_gradient(circuit: &Circuit, poly: &Polynomial, offset: f64) -> Result<Vec<f64>> {
    let poly = lift(circuit, poly)?;
    let plan = ElboPlan::new(circuit, &poly)?;
    let mut ws = ElboWorkspace::new(&plan);
    let mut g = vec![0.0; circuit.num_params()];
    plan.evaluate(circuit, circuit.params(), offset, &mut ws, Some(&mut g))?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::build_mean_field;

    fn bernoulli(logit: f64) -> Circuit {
        let mut c = Circuit::new(1);
        c.add_bernoulli(0, logit).unwrap();
        c
    }

    fn theta_x(theta: f64) -> Polynomial {
        Polynomial::new(1, vec![Monomial::new(theta, vec![0])]).unwrap()
    }

    #[test]
    fn zero_mean_mean_field_pair_expectation() {
        let mut c = build_mean_field(2, 0).unwrap().circuit;
        let zeros = vec![0.0; c.num_params()];
        c.set_params(zeros).unwrap();
        let e = expect_monomial(&c, &Monomial::new(1.0, vec![0, 1])).unwrap();
        assert!(e.abs() < 1e-15);
    }

    #[test]
    fn mixture_expectation() {
        let mut c = Circuit::new(1);
        let pos = c.add_literal(0, true).unwrap();
        let neg = c.add_literal(0, false).unwrap();
        c.add_sum(vec![pos, neg], vec![0.3f64.ln(), 0.7f64.ln()])
            .unwrap();
        let e = expect_monomial(&c, &Monomial::new(5.0, vec![0])).unwrap();
        assert!((e + 2.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_target_is_tight() {
        let mut c = build_mean_field(3, 0).unwrap().circuit;
        c.set_params(vec![0.0; c.num_params()]).unwrap();
        let b = elbo(&c, &Polynomial::zero(5), 0.0).unwrap_err();
        assert!(matches!(b, Error::InvalidCircuit(_)));
        let b = elbo(&c, &Polynomial::zero(3), 0.0).unwrap();
        assert!((b.total - 4.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn optimal_bernoulli_is_tight() {
        // P(x = +1) = e / (e + 1/e) = sigmoid(2)
        let b = elbo(&bernoulli(2.0), &theta_x(1.0), 0.0).unwrap();
        let log_z = (2.0 * 1f64.cosh()).ln();
        assert!((b.total - log_z).abs() < 1e-12);
        assert!((log_z - 1.1269280110429725).abs() < 1e-14);
    }

    #[test]
    fn symmetric_point_gradient_is_half_theta() {
        let theta = 1.7;
        let g = elbo_gradient(&bernoulli(0.0), &theta_x(theta), 0.0).unwrap();
        assert!((g[0] - theta / 2.0).abs() < 1e-14);
    }

    #[test]
    fn empty_polynomial_has_entropy_gradient_only() {
        let c = build_mean_field(4, 1).unwrap().circuit;
        let g = elbo_gradient(&c, &Polynomial::zero(4), 0.0).unwrap();
        let weights = c.weights(c.params());
        let h = c.node_entropies(&weights);
        let mut adj = vec![0.0; c.len()];
        let mut expected = vec![0.0; c.num_params()];
        entropy_adjoint(&c, c.params(), &weights, &h, &mut adj, &mut expected);
        assert_eq!(g, expected);
    }

    #[test]
    fn rejects_out_of_scope_terms() {
        let c = bernoulli(0.0);
        assert!(expect_monomial(&c, &Monomial::new(1.0, vec![1])).is_err());
        let mut partial = Circuit::new(2);
        partial.add_bernoulli(0, 0.0).unwrap();
        assert!(matches!(
            expect_monomial(&partial, &Monomial::new(1.0, vec![1])),
            Err(Error::VariableNotInScope { var: 1 })
        ));
    }

    #[test]
    fn offset_is_subtracted() {
        let c = bernoulli(0.3);
        let a = elbo(&c, &theta_x(0.5), 0.0).unwrap();
        let b = elbo(&c, &theta_x(0.5), 1.25).unwrap();
        assert!((a.total - b.total - 1.25).abs() < 1e-15);
        assert_eq!(b.offset, 1.25);
    }
}
