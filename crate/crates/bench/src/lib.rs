//! Shared fixtures for the criterion benchmarks.

use circuit_vi::{build, gen_ising, BuildConfig, BuiltCircuit, CouplingMode, IsingSpec, Polynomial};

pub fn ising(side: usize, seed: u64) -> Polynomial {
    gen_ising(&IsingSpec {
        rows: side,
        cols: side,
        gamma: 2.0,
        mode: CouplingMode::Mixed,
        seed,
    })
    .expect("valid grid")
}

pub fn circuit(num_vars: usize, k: usize) -> BuiltCircuit {
    build(&BuildConfig::new(num_vars, k).seed(1)).expect("valid build config")
}
