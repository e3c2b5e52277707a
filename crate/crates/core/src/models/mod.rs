//! Benchmark model sources: random Ising grids and UAI factor graphs.

mod ising;
mod uai;

pub use ising::{gen_ising, site, CouplingMode, IsingSpec};
pub use uai::{
    factor_graph_to_polynomial, parse_uai, polynomial_to_factor_graph, Factor, FactorGraph,
};
