mod common;

use circuit_vi::{build, build_mean_field, BuildConfig, Node, ValidationMode};
use common::{all_assignments, rng};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn small_builds_are_selective(n in 1usize..17, k in 1usize..300, seed in any::<u64>(), permute in any::<bool>()) {
        let b = build(&BuildConfig::new(n, k).seed(seed).permute_vars(permute)).unwrap();
        let report = b.circuit.validate(ValidationMode::Exhaustive).unwrap();
        prop_assert!(report.is_valid(), "{}", report);
        prop_assert!(b.padding.padded_vars.is_power_of_two() && b.padding.padded_vars >= n);
        prop_assert!(b.padding.padded_k >= k && b.padding.padded_k.trailing_zeros() % 2 == 0);
    }

    #[test]
    fn builds_are_normalized(n in 1usize..9, k in 1usize..80, seed in any::<u64>()) {
        let mut c = build(&BuildConfig::new(n, k).seed(seed)).unwrap().circuit;
        c.randomize_params(&mut rng(seed), 2.0);
        let total: f64 = all_assignments(c.num_vars()).map(|x| c.evaluate(&x).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seeds_change_only_parameters(n in 2usize..40, k in 1usize..70, a in any::<u64>(), b in any::<u64>()) {
        let x = build(&BuildConfig::new(n, k).seed(a)).unwrap().circuit;
        let y = build(&BuildConfig::new(n, k).seed(b)).unwrap().circuit;
        prop_assert_eq!(x.len(), y.len());
        prop_assert_eq!(x.size(), y.size());
    }
}

#[test]
fn mean_field_is_fully_factored() {
    let mut c = build_mean_field(6, 2).unwrap().circuit;
    c.randomize_params(&mut rng(8), 1.0);
    let n = c.num_vars();
    let marginal = |v: usize| -> f64 {
        all_assignments(n)
            .filter(|x| x[v] == 1)
            .map(|x| c.evaluate(&x).unwrap())
            .sum()
    };
    let m: Vec<f64> = (0..n).map(marginal).collect();
    for x in all_assignments(n) {
        let product: f64 = x
            .iter()
            .enumerate()
            .map(|(v, &s)| if s == 1 { m[v] } else { 1.0 - m[v] })
            .product();
        assert!((c.evaluate(&x).unwrap() - product).abs() < 1e-14);
    }
}

#[test]
fn mean_field_has_one_sum_per_variable() {
    let c = build_mean_field(16, 0).unwrap().circuit;
    let sums = c.nodes().iter().filter(|n| matches!(n, Node::Sum { .. })).count();
    assert_eq!(sums, 16);
    assert_eq!(c.num_params(), 32);
}

#[test]
fn size_grows_linearly_in_k() {
    let n = 64;
    let mut prev = None;
    for k in [1, 4, 16, 64, 256] {
        let e = build(&BuildConfig::new(n, k)).unwrap().circuit.size().edges;
        if let Some(p) = prev {
            let ratio = e as f64 / p as f64;
            assert!(ratio <= 4.5, "k={k}: {p} -> {e}");
        }
        prev = Some(e);
    }
}
