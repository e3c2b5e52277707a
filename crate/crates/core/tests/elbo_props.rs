mod common;

use circuit_vi::oracle::{exact_elbo, exact_log_partition};
use circuit_vi::{build, elbo, elbo_gradient, BuildConfig, Circuit};
use common::{random_circuit, random_polynomial, rng};
use proptest::prelude::*;

fn with_params(c: &Circuit, params: &[f64]) -> Circuit {
    let mut c = c.clone();
    c.set_params(params.to_vec()).unwrap();
    c
}

fn builder_circuit(n: usize, k: usize, seed: u64) -> Circuit {
    let mut c = build(&BuildConfig::new(n, k).seed(seed).permute_vars(true)).unwrap().circuit;
    c.randomize_params(&mut rng(seed ^ 0xabc), 1.5);
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn elbo_matches_enumeration(seed in any::<u64>(), n in 1usize..11) {
        let mut r = rng(seed);
        let c = random_circuit(n, &mut r, false);
        let p = random_polynomial(n, 25, 4, &mut r);
        let fast = elbo(&c, &p, 0.0).unwrap().total;
        let exact = exact_elbo(&c, &p).unwrap();
        prop_assert!((fast - exact).abs() <= 1e-9 * exact.abs().max(1.0), "{} vs {}", fast, exact);
    }

    #[test]
    fn elbo_is_a_lower_bound(seed in any::<u64>(), n in 1usize..11) {
        let mut r = rng(seed);
        let c = random_circuit(n, &mut r, false);
        let p = random_polynomial(n, 25, 4, &mut r);
        let b = elbo(&c, &p, 0.0).unwrap().total;
        prop_assert!(b <= exact_log_partition(&p).unwrap() + 1e-7);
    }

    #[test]
    fn builder_elbo_is_a_lower_bound(seed in any::<u64>(), n in 1usize..9, k in 0u32..4) {
        let c = builder_circuit(n, 4usize.pow(k), seed);
        let p = random_polynomial(n, 20, 3, &mut rng(seed));
        let built = build(&BuildConfig::new(n, 1)).unwrap();
        let b = elbo(&c, &p, built.padding.elbo_offset).unwrap().total;
        prop_assert!(b <= exact_log_partition(&p).unwrap() + 1e-7);
    }

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), n in 2usize..8) {
        let mut r = rng(seed);
        let c = if seed % 2 == 0 { random_circuit(n, &mut r, false) } else { builder_circuit(n, 16, seed) };
        let p = random_polynomial(n, 15, 3, &mut r);
        let g = elbo_gradient(&c, &p, 0.0).unwrap();
        let h = 1e-5;
        for i in 0..c.num_params() {
            let mut plus = c.params().to_vec();
            plus[i] += h;
            let mut minus = c.params().to_vec();
            minus[i] -= h;
            let fd = (elbo(&with_params(&c, &plus), &p, 0.0).unwrap().total
                - elbo(&with_params(&c, &minus), &p, 0.0).unwrap().total)
                / (2.0 * h);
            let err = (g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1.0);
            prop_assert!(err <= 1e-5, "param {}: {} vs {}", i, g[i], fd);
        }
    }
}

#[test]
fn padded_variables_cost_nothing_at_uniform() {
    let p = random_polynomial(5, 10, 3, &mut rng(3));
    let built = build(&BuildConfig::new(5, 16).init_scale(0.0)).unwrap();
    let padded = elbo(&built.circuit, &p, 0.0).unwrap();
    let corrected = elbo(&built.circuit, &p, built.padding.elbo_offset).unwrap();
    assert!((padded.total - corrected.total - 3.0 * std::f64::consts::LN_2).abs() < 1e-12);
}
