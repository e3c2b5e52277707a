//! Layered construction of selective sum-product networks of size `O(kn)`.
//!
//! The builder tracks `n` partitions of `c` nodes each, starting from the two
//! literal leaves `[x_i = -1], [x_i = +1]` of every variable. Each round it
//! first shrinks partitions with more than `sqrt(k)` nodes through a sum
//! layer (every child feeds exactly one sum node), then merges adjacent
//! partition pairs with a Cartesian-product layer (`c -> c^2`, partitions
//! halve). A final sum node joins the last partition when it has more than
//! one node. The `c` nodes of every partition have pairwise disjoint
//! support at every layer, which makes each sum node selective.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::circuit::{Circuit, NodeId};
use crate::error::{Error, Result};

pub const DEFAULT_INIT_SCALE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct BuildConfig {
    /// Number of model variables; padded up to a power of two.
    pub num_vars: usize,
    /// Size budget; rounded up to a power of four.
    pub k: usize,
    pub seed: u64,
    /// Standard deviation of the initial sum logits.
    pub init_scale: f64,
    /// Shuffle the variable-to-leaf assignment with the seed.
    pub permute_vars: bool,
}

impl BuildConfig {
    pub fn new(num_vars: usize, k: usize) -> Self {
        Self {
            num_vars,
            k,
            seed: 0,
            init_scale: DEFAULT_INIT_SCALE,
            permute_vars: false,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn init_scale(mut self, scale: f64) -> Self {
        self.init_scale = scale;
        self
    }

    pub fn permute_vars(mut self, permute: bool) -> Self {
        self.permute_vars = permute;
        self
    }

    fn check(&self) -> Result<()> {
        if self.num_vars == 0 {
            return Err(Error::InvalidConfig("num_vars must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "init_scale must be finite and non-negative, got {}",
                self.init_scale
            )));
        }
        Ok(())
    }
}

/// Padding applied to reach the builder's shape constraints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Padding {
    pub num_vars: usize,
    pub padded_vars: usize,
    pub k: usize,
    pub padded_k: usize,
    /// `(padded_vars - num_vars) ln 2`, to subtract from an ELBO computed on
    /// the padded model.
    pub elbo_offset: f64,
}

#[derive(Clone, Debug)]
pub struct BuiltCircuit {
    pub circuit: Circuit,
    pub padding: Padding,
}

/// Next power of two for `n` and the matching ELBO correction.
///
/// Dummy variables appear in no monomial, so the padded model has
/// `Z' = 2^(#dummy) Z` and subtracting `#dummy ln 2` keeps the ELBO a lower
/// bound on `ln Z`; it is tight when the dummy marginals are uniform.
pub fn pad_correction(num_vars: usize) -> (usize, f64) {
    let padded = num_vars.max(1).next_power_of_two();
    (padded, (padded - num_vars) as f64 * std::f64::consts::LN_2)
}

/// Smallest power of four `>= k`.
pub fn round_k(k: usize) -> usize {
    let mut r = 1;
    while r < k {
        r *= 4;
    }
    r
}

pub fn build(config: &BuildConfig) -> Result<BuiltCircuit> {
    config.check()?;
    let (padded_vars, elbo_offset) = pad_correction(config.num_vars);
    let padded_k = round_k(config.k);
    let sqrt_k = (padded_k as f64).sqrt().round() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = (config.init_scale > 0.0)
        .then(|| Normal::new(0.0, config.init_scale).expect("validated scale"));
    let logits = |len: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        match &normal {
            Some(d) => (0..len).map(|_| d.sample(rng)).collect(),
            None => vec![0.0; len],
        }
    };

    let mut order: Vec<usize> = (0..padded_vars).collect();
    if config.permute_vars {
        order.shuffle(&mut rng);
    }

    let mut circuit = Circuit::new(padded_vars);
    let mut partitions: Vec<Vec<NodeId>> = Vec::with_capacity(padded_vars);
    for &var in &order {
        let neg = circuit.add_literal(var, false)?;
        let pos = circuit.add_literal(var, true)?;
        partitions.push(vec![neg, pos]);
    }

    while partitions.len() > 1 {
        let c = partitions[0].len();
        if c > sqrt_k {
            let r = c / sqrt_k;
            for part in &mut partitions {
                let mut reduced = Vec::with_capacity(sqrt_k);
                for chunk in part.chunks(r) {
                    let l = logits(chunk.len(), &mut rng);
                    reduced.push(circuit.add_sum(chunk.to_vec(), l)?);
                }
                *part = reduced;
            }
        }
        let mut merged = Vec::with_capacity(partitions.len() / 2);
        for pair in partitions.chunks(2) {
            let (left, right) = (&pair[0], &pair[1]);
            let mut products = Vec::with_capacity(left.len() * right.len());
            for &a in left {
                for &b in right {
                    products.push(circuit.add_product(vec![a, b])?);
                }
            }
            merged.push(products);
        }
        partitions = merged;
    }

    let last = &partitions[0];
    if last.len() > 1 {
        let l = logits(last.len(), &mut rng);
        circuit.add_sum(last.clone(), l)?;
    }

    Ok(BuiltCircuit {
        circuit,
        padding: Padding {
            num_vars: config.num_vars,
            padded_vars,
            k: config.k,
            padded_k,
            elbo_offset,
        },
    })
}

/// Fully factored distribution: the `k = 1` construction.
pub fn build_mean_field(num_vars: usize, seed: u64) -> Result<BuiltCircuit> {
    build(&BuildConfig::new(num_vars, 1).seed(seed))
}
