//! Collision check for the tuple index: every non-empty subset of a small
//! range must get its own index, and random multisets must index like their
//! sorted distinct elements regardless of order and repetition.

use std::collections::HashMap;

use bisim_core::tuple_index::{tuple_index, IndexDomain, TupleIndexError};
use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SelftestConfig {
    /// Subsets of `0..universe` are enumerated exhaustively.
    pub universe: u32,
    pub multisets: usize,
    pub seed: u64,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            universe: 12,
            multisets: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SelftestSummary {
    pub subsets: usize,
    pub multisets: usize,
}

#[derive(Debug, Error)]
pub enum SelftestError {
    #[error("universe must be between 1 and 24, got {0}")]
    Universe(u32),
    #[error("subsets {first:?} and {second:?} share index {index}")]
    Collision {
        first: Vec<u64>,
        second: Vec<u64>,
        index: BigUint,
    },
    #[error("multiset {multiset:?} indexes to {got}, its distinct elements to {expected}")]
    NotInvariant {
        multiset: Vec<u64>,
        got: BigUint,
        expected: BigUint,
    },
    #[error(transparent)]
    Index(#[from] TupleIndexError),
}

fn members(mask: u32, universe: u32) -> Vec<u64> {
    (0..universe)
        .filter(|i| mask & (1 << i) != 0)
        .map(u64::from)
        .collect()
}

pub fn run_selftest(config: &SelftestConfig) -> Result<SelftestSummary, SelftestError> {
    if !(1..=24).contains(&config.universe) {
        return Err(SelftestError::Universe(config.universe));
    }
    let domain = IndexDomain::new(u64::from(config.universe))?;

    let mut seen: HashMap<BigUint, u32> = HashMap::new();
    let subsets = (1u32 << config.universe) - 1;
    for mask in 1..=subsets {
        let index = tuple_index(&members(mask, config.universe), domain)?;
        if let Some(&other) = seen.get(&index) {
            return Err(SelftestError::Collision {
                first: members(other, config.universe),
                second: members(mask, config.universe),
                index,
            });
        }
        seen.insert(index, mask);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.multisets {
        let len = rng.gen_range(1..=2 * config.universe as usize);
        let mut multiset: Vec<u64> = (0..len)
            .map(|_| rng.gen_range(0..u64::from(config.universe)))
            .collect();
        let mut distinct = multiset.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let expected = tuple_index(&distinct, domain)?;
        multiset.shuffle(&mut rng);
        let got = tuple_index(&multiset, domain)?;
        if got != expected {
            return Err(SelftestError::NotInvariant {
                multiset,
                got,
                expected,
            });
        }
    }
    Ok(SelftestSummary {
        subsets: subsets as usize,
        multisets: config.multisets,
    })
}
