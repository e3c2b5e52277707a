use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::{Monomial, Polynomial};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingMode {
    /// Couplings uniform in `[0, gamma]`.
    Positive,
    /// Couplings uniform in `[-gamma, gamma]`.
    Mixed,
}

impl std::str::FromStr for CouplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(CouplingMode::Positive),
            "mixed" => Ok(CouplingMode::Mixed),
            other => Err(Error::InvalidConfig(format!("unknown coupling mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for CouplingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CouplingMode::Positive => "positive",
            CouplingMode::Mixed => "mixed",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingSpec {
    pub rows: usize,
    pub cols: usize,
    pub gamma: f64,
    pub mode: CouplingMode,
    pub seed: u64,
}

impl IsingSpec {
    pub fn num_vars(&self) -> usize {
        self.rows * self.cols
    }

    /// `rows (cols - 1) + (rows - 1) cols`.
    pub fn num_edges(&self) -> usize {
        self.rows * (self.cols - 1) + (self.rows - 1) * self.cols
    }

    fn check(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid must be at least 2x2, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be finite and non-negative, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Index of grid site `(r, c)`.
pub fn site(cols: usize, r: usize, c: usize) -> usize {
    r * cols + c
}

/// One `theta_e x_i x_j` monomial per 4-neighbour edge, no field terms.
/// Edges are emitted site by site in row-major order, right neighbour first.
/// Zero couplings are kept so the term count is always the edge count.
pub fn gen_ising(spec: &IsingSpec) -> Result<Polynomial> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut draw = || -> f64 {
        let u: f64 = rng.random();
        match spec.mode {
            CouplingMode::Positive => spec.gamma * u,
            CouplingMode::Mixed => spec.gamma * (2.0 * u - 1.0),
        }
    };
    let mut terms = Vec::with_capacity(spec.num_edges());
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let i = site(spec.cols, r, c);
            if c + 1 < spec.cols {
                terms.push(Monomial::new(draw(), vec![i, site(spec.cols, r, c + 1)]));
            }
            if r + 1 < spec.rows {
                terms.push(Monomial::new(draw(), vec![i, site(spec.cols, r + 1, c)]));
            }
        }
    }
    Polynomial::new(spec.num_vars(), terms)
}
