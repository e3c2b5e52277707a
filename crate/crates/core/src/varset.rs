//! Fixed-capacity variable sets, one `u64` word per 64 variables.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct VarSet {
    words: Vec<u64>,
}

impl VarSet {
    pub fn empty(num_vars: usize) -> Self {
        Self {
            words: vec![0; num_vars.div_ceil(64)],
        }
    }

    pub fn full(num_vars: usize) -> Self {
        let mut set = Self::empty(num_vars);
        for v in 0..num_vars {
            set.insert(v);
        }
        set
    }

    pub fn singleton(num_vars: usize, var: usize) -> Self {
        let mut set = Self::empty(num_vars);
        set.insert(var);
        set
    }

    pub fn insert(&mut self, var: usize) {
        self.words[var / 64] |= 1 << (var % 64);
    }

    pub fn contains(&self, var: usize) -> bool {
        self.words
            .get(var / 64)
            .is_some_and(|w| w & (1 << (var % 64)) != 0)
    }

    pub fn union_with(&mut self, other: &VarSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn is_disjoint(&self, other: &VarSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i * 64 + tz)
            })
        })
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
