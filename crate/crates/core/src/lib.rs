//! Variational inference in binary graphical models with selective
//! sum-product networks.
//!
//! The target is an unnormalized density `w(x) = exp(v(x))` over
//! `x in {-1, +1}^n` whose log-density `v` is a multilinear [`Polynomial`].
//! For a selective, decomposable [`Circuit`] `q`, the evidence lower bound
//! `E_q[v] + H(q) <= ln Z` and its gradient are computed exactly in time
//! linear in the number of terms times the circuit size, and maximized over
//! the circuit parameters with multi-restart Adam.
//!
//! ```
//! use circuit_vi::{build, fit, gen_ising, BuildConfig, CouplingMode, IsingSpec, OptConfig};
//!
//! let spec = IsingSpec { rows: 3, cols: 3, gamma: 1.0, mode: CouplingMode::Mixed, seed: 1 };
//! let poly = gen_ising(&spec).unwrap();
//! let built = build(&BuildConfig::new(poly.num_vars(), 16)).unwrap();
//! let cfg = OptConfig { iters: 200, restarts: 2, ..Default::default() };
//! let result = fit(&built.circuit, &poly, built.padding.elbo_offset, &cfg).unwrap();
//! let log_z = circuit_vi::oracle::exact_log_partition(&poly).unwrap();
//! assert!(result.best_elbo <= log_z + 1e-9);
//! ```

pub mod builder;
pub mod circuit;
pub mod elbo;
pub mod error;
pub mod math;
pub mod models;
pub mod optimizer;
pub mod oracle;
pub mod polynomial;
pub mod varset;

pub use builder::{build, build_mean_field, pad_correction, BuildConfig, BuiltCircuit, Padding};
pub use circuit::{Circuit, CircuitSize, Node, NodeId, ValidationMode, ValidityReport, Violation};
pub use elbo::{elbo, elbo_gradient, expect_monomial, ElboBreakdown, ElboPlan, ElboWorkspace};
pub use error::{Error, ParseError, ParseErrorKind, Result};
pub use models::{
    factor_graph_to_polynomial, gen_ising, parse_uai, polynomial_to_factor_graph, CouplingMode,
    Factor, FactorGraph, IsingSpec,
};
pub use optimizer::{fit, importance_estimate, FitResult, ImportanceEstimate, OptConfig};
pub use oracle::OracleReport;
pub use polynomial::{Monomial, Polynomial};
