mod common;

use std::time::Duration;

use circuit_vi::oracle::exact_log_partition;
use circuit_vi::{
    build, build_mean_field, fit, gen_ising, importance_estimate, BuildConfig, CouplingMode, Error,
    IsingSpec, OptConfig, Polynomial,
};
use common::{random_polynomial, rng};

fn ising(rows: usize, cols: usize, gamma: f64, seed: u64) -> Polynomial {
    gen_ising(&IsingSpec {
        rows,
        cols,
        gamma,
        mode: CouplingMode::Mixed,
        seed,
    })
    .unwrap()
}

#[test]
fn fitted_bounds_never_exceed_log_partition() {
    for seed in 0..12u64 {
        let p = random_polynomial(7, 20, 3, &mut rng(seed));
        let log_z = exact_log_partition(&p).unwrap();
        for k in [1, 4, 16] {
            let b = build(&BuildConfig::new(7, k)).unwrap();
            let cfg = OptConfig { iters: 300, restarts: 3, seed, ..Default::default() };
            let r = fit(&b.circuit, &p, b.padding.elbo_offset, &cfg).unwrap();
            assert!(r.best_elbo <= log_z + 1e-7, "seed {seed} k {k}");
            for t in &r.traces {
                assert!(t.points.iter().all(|pt| pt.elbo <= log_z + 1e-7));
            }
        }
    }
}

#[test]
fn larger_budget_is_at_least_as_good() {
    let p = ising(3, 3, 2.0, 4);
    let b = build(&BuildConfig::new(9, 64)).unwrap();
    let small = fit(&b.circuit, &p, b.padding.elbo_offset, &OptConfig { restarts: 1, iters: 400, ..Default::default() }).unwrap();
    let large = fit(&b.circuit, &p, b.padding.elbo_offset, &OptConfig { restarts: 4, iters: 400, ..Default::default() }).unwrap();
    assert!(large.best_elbo >= small.best_elbo);
}

#[test]
fn best_is_the_maximum_over_traces() {
    let p = ising(3, 4, 1.5, 2);
    let b = build(&BuildConfig::new(12, 16)).unwrap();
    let r = fit(&b.circuit, &p, b.padding.elbo_offset, &OptConfig { restarts: 5, iters: 200, seed: 11, ..Default::default() }).unwrap();
    let max = r
        .traces
        .iter()
        .flat_map(|t| t.points.iter().map(|p| p.elbo))
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(r.best_elbo, max);
    assert_eq!(r.traces[r.best_restart].best_elbo, max);
    assert_eq!(r.traces.iter().map(|t| t.seed).collect::<Vec<_>>(), (11..16).collect::<Vec<_>>());

    let mut c = b.circuit.clone();
    c.set_params(r.best_params.clone()).unwrap();
    let again = circuit_vi::elbo(&c, &p, b.padding.elbo_offset).unwrap().total;
    assert_eq!(again, r.best_elbo);

    let csv = r.trace_csv();
    assert!(csv.starts_with("restart,iter,elbo,wall_ms\n"));
    assert_eq!(csv.lines().count(), 1 + r.traces.iter().map(|t| t.points.len()).sum::<usize>());
}

#[test]
fn time_budget_stops_early() {
    let p = ising(8, 8, 3.0, 1);
    let b = build(&BuildConfig::new(64, 256)).unwrap();
    let cfg = OptConfig {
        iters: 1_000_000,
        tol: 0.0,
        restarts: 2,
        time_budget: Some(Duration::from_millis(300)),
        ..Default::default()
    };
    let r = fit(&b.circuit, &p, 0.0, &cfg).unwrap();
    assert!(r.wall_time < Duration::from_secs(5));
    assert!(r.best_elbo.is_finite());
}

#[test]
fn polynomial_with_too_many_variables_is_rejected() {
    let b = build_mean_field(4, 0).unwrap();
    let p = Polynomial::zero(9);
    assert!(matches!(fit(&b.circuit, &p, 0.0, &OptConfig::default()), Err(Error::InvalidCircuit(_))));
}

#[test]
fn importance_estimate_is_consistent() {
    let p = ising(3, 3, 1.0, 7);
    let log_z = exact_log_partition(&p).unwrap();
    let b = build(&BuildConfig::new(9, 16)).unwrap();
    let r = fit(&b.circuit, &p, 0.0, &OptConfig { iters: 500, restarts: 2, ..Default::default() }).unwrap();
    let mut c = b.circuit.clone();
    c.set_params(r.best_params).unwrap();
    // the padded model has 7 dummy variables, each doubling Z
    let padded_log_z = log_z + 7.0 * std::f64::consts::LN_2;
    for seed in 0..4 {
        let est = importance_estimate(&c, &p, 4000, seed).unwrap();
        assert!(
            (est.log_z - padded_log_z).abs() <= 3.0 * est.std_err + 1e-12,
            "seed {seed}: {} vs {padded_log_z} (se {})",
            est.log_z,
            est.std_err
        );
    }
}

#[test]
fn k64_dominates_mean_field_on_small_grids() {
    let mut wins = 0;
    for seed in 0..20 {
        let p = ising(4, 4, 3.0, 500 + seed);
        let log_z = exact_log_partition(&p).unwrap();
        let best = |k: usize| {
            let b = build(&BuildConfig::new(16, k).seed(seed)).unwrap();
            let cfg = OptConfig { restarts: 4, seed, ..Default::default() };
            fit(&b.circuit, &p, b.padding.elbo_offset, &cfg).unwrap().best_elbo
        };
        let (mf, spn) = (best(1), best(64));
        assert!(mf <= log_z + 1e-7 && spn <= log_z + 1e-7);
        if spn >= mf {
            wins += 1;
        }
    }
    assert!(wins >= 18, "k=64 won {wins}/20");
}
