#![allow(dead_code)]

use circuit_vi::{Circuit, Monomial, NodeId, Polynomial};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Assignment for bit pattern `bits`; bit `v` set means `x_v = -1`.
pub fn assignment(bits: u64, n: usize) -> Vec<i8> {
    (0..n).map(|v| if bits >> v & 1 == 1 { -1 } else { 1 }).collect()
}

pub fn all_assignments(n: usize) -> impl Iterator<Item = Vec<i8>> {
    (0..1u64 << n).map(move |b| assignment(b, n))
}

/// Random smooth, decomposable, selective circuit over `0..n`.
///
/// Sums split on the sign of one variable, products partition the scope, and
/// leaves are Bernoulli distributions. With `full_support` false some sums
/// drop a branch, so parts of the space get probability zero.
pub fn random_circuit(n: usize, rng: &mut ChaCha8Rng, full_support: bool) -> Circuit {
    let mut c = Circuit::new(n);
    let mut vars: Vec<usize> = (0..n).collect();
    vars.shuffle(rng);
    grow(&mut c, &vars, rng, full_support, 0);
    c
}

fn logit(rng: &mut ChaCha8Rng) -> f64 {
    Normal::new(0.0, 1.5).unwrap().sample(rng)
}

fn grow(c: &mut Circuit, vars: &[usize], rng: &mut ChaCha8Rng, full: bool, depth: usize) -> NodeId {
    if vars.len() == 1 {
        let v = vars[0];
        return if rng.random_bool(0.25) {
            let neg = c.add_literal(v, false).unwrap();
            let pos = c.add_literal(v, true).unwrap();
            let l = vec![logit(rng), logit(rng)];
            c.add_sum(vec![neg, pos], l).unwrap()
        } else {
            let l = logit(rng);
            c.add_bernoulli(v, l).unwrap()
        };
    }
    let split = depth < 6 && rng.random_bool(0.55);
    if split {
        let (&v, rest) = vars.split_first().unwrap();
        let dropped = (!full && rng.random_bool(0.2)).then(|| rng.random_bool(0.5));
        let mut branches = Vec::new();
        for positive in [false, true] {
            if dropped == Some(positive) {
                continue;
            }
            let lit = c.add_literal(v, positive).unwrap();
            let sub = grow(c, rest, rng, full, depth + 1);
            branches.push(c.add_product(vec![lit, sub]).unwrap());
        }
        let l = (0..branches.len()).map(|_| logit(rng)).collect();
        c.add_sum(branches, l).unwrap()
    } else {
        let parts = rng.random_range(2..=vars.len().min(3));
        let mut cut: Vec<usize> = (1..vars.len()).collect();
        cut.shuffle(rng);
        let mut cut = cut[..parts - 1].to_vec();
        cut.sort_unstable();
        let mut children = Vec::new();
        let mut start = 0;
        for end in cut.into_iter().chain(std::iter::once(vars.len())) {
            children.push(grow(c, &vars[start..end], rng, full, depth + 1));
            start = end;
        }
        c.add_product(children).unwrap()
    }
}

/// Random multilinear polynomial with up to `max_terms` terms of degree at
/// most `max_degree`, including an occasional constant.
pub fn random_polynomial(n: usize, max_terms: usize, max_degree: usize, rng: &mut ChaCha8Rng) -> Polynomial {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let count = rng.random_range(0..=max_terms);
    let mut terms = Vec::with_capacity(count);
    for _ in 0..count {
        let d = rng.random_range(0..=max_degree.min(n));
        let mut vars: Vec<usize> = (0..n).collect();
        vars.shuffle(rng);
        vars.truncate(d);
        terms.push(Monomial::new(normal.sample(rng), vars));
    }
    Polynomial::new(n, terms).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
