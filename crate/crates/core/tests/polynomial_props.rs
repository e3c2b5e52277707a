mod common;

use circuit_vi::oracle::exact_log_partition;
use circuit_vi::{
    factor_graph_to_polynomial, parse_uai, polynomial_to_factor_graph, Factor, FactorGraph, Polynomial,
};
use common::{all_assignments, random_polynomial, rel_err, rng};
use proptest::prelude::*;
use rand::Rng;

fn table_strategy(max_scope: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1..=max_scope).prop_flat_map(|d| (Just(d), prop::collection::vec(0.01f64..50.0, 1 << d)))
}

fn random_graph(n: usize, seed: u64) -> FactorGraph {
    let mut r = rng(seed);
    let m = r.random_range(1..=2 * n);
    let factors = (0..m)
        .map(|_| {
            let d = r.random_range(1..=n.min(4));
            let mut scope: Vec<usize> = (0..n).collect();
            rand::seq::SliceRandom::shuffle(&mut scope[..], &mut r);
            scope.truncate(d);
            let table = (0..1 << d).map(|_| r.random_range(0.05..20.0)).collect();
            Factor { scope, table }
        })
        .collect();
    FactorGraph {
        num_vars: n,
        cardinalities: vec![2; n],
        factors,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn fourier_expansion_reproduces_table((d, table) in table_strategy(6)) {
        let scope: Vec<usize> = (0..d).rev().collect();
        let p = Polynomial::from_factor_table(d, &scope, &table).unwrap();
        for (s, &phi) in table.iter().enumerate() {
            // state bits of the scope, last scope variable fastest
            let mut x = vec![0i8; d];
            for (pos, &v) in scope.iter().enumerate() {
                let bit = s >> (d - 1 - pos) & 1;
                x[v] = 1 - 2 * bit as i8;
            }
            let v = p.evaluate(&x).unwrap();
            prop_assert!((v - phi.ln()).abs() <= 1e-12 * phi.ln().abs().max(1.0));
        }
    }

    #[test]
    fn parseval_identity((d, table) in table_strategy(6)) {
        let scope: Vec<usize> = (0..d).collect();
        let p = Polynomial::from_factor_table(d, &scope, &table).unwrap();
        let coeff_energy: f64 = p.terms().iter().map(|t| t.coefficient.powi(2)).sum();
        let mean_sq = table.iter().map(|t| t.ln().powi(2)).sum::<f64>() / table.len() as f64;
        prop_assert!((coeff_energy - mean_sq).abs() <= 1e-9 * mean_sq.max(1.0));
    }

    #[test]
    fn canonical_form_is_equivalent(seed in any::<u64>(), n in 1usize..9) {
        let p = random_polynomial(n, 30, 4, &mut rng(seed));
        let mut doubled = p.clone();
        doubled.extend(p.clone());
        let c = doubled.canonicalize();
        let mut seen = std::collections::HashSet::new();
        for t in c.terms() {
            prop_assert!(seen.insert(t.vars().to_vec()));
        }
        for x in all_assignments(n) {
            let a = 2.0 * p.evaluate(&x).unwrap();
            let b = c.evaluate(&x).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn text_round_trip(seed in any::<u64>(), n in 1usize..12) {
        let p = random_polynomial(n, 20, 5, &mut rng(seed));
        let back = Polynomial::from_text(&p.to_text()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn factor_graph_conversion_is_exact(seed in any::<u64>(), n in 1usize..9) {
        let fg = random_graph(n, seed);
        let p = factor_graph_to_polynomial(&fg).unwrap();
        for x in all_assignments(n) {
            let lhs = p.evaluate(&x).unwrap().exp();
            prop_assert!(rel_err(lhs, fg.product(&x)) < 1e-9);
        }
    }

    #[test]
    fn polynomial_to_graph_and_back(seed in any::<u64>(), n in 1usize..8) {
        let p = random_polynomial(n, 12, 3, &mut rng(seed));
        let fg = polynomial_to_factor_graph(&p).unwrap();
        let text = fg.to_uai();
        let parsed = parse_uai(&text).unwrap();
        for x in all_assignments(n) {
            let v = p.evaluate(&x).unwrap();
            prop_assert!(rel_err(parsed.product(&x), v.exp()) < 1e-9);
        }
        let back = factor_graph_to_polynomial(&parsed).unwrap();
        let za = exact_log_partition(&p).unwrap();
        let zb = exact_log_partition(&back).unwrap();
        prop_assert!((za - zb).abs() < 1e-9 * za.abs().max(1.0));
    }

    #[test]
    fn uai_text_round_trip(seed in any::<u64>(), n in 1usize..10) {
        let fg = random_graph(n, seed);
        prop_assert_eq!(parse_uai(&fg.to_uai()).unwrap(), fg);
    }

    #[test]
    fn parser_never_panics(text in "[A-Z0-9 .\\-\\n]{0,80}") {
        let _ = parse_uai(&text);
        let _ = Polynomial::from_text(&text);
        let _ = circuit_vi::Circuit::from_text(&text);
    }
}
