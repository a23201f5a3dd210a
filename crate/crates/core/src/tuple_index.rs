//! Unique integer indices for unordered sets of bounded integers.
//!
//! A multiset `tbl` over `[0, d)` is reduced to its sorted distinct elements
//! `t_0 < t_1 < ... < t_m` and mapped to `t_0 + t_1·d + ... + t_m·d^m`. For a
//! fixed `d` this is injective on non-empty sets: the `k`-element sets occupy
//! `[(k-1)·d^(k-1), d^k)`, and within one size it is a base-`d` numeral.
//!
//! The exact mode returns a [`BigUint`]. The engine uses [`folded_index`],
//! the same weighted sum taken modulo 2^64 over mixed element codes, and
//! falls back to structural comparison on equal digests.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TupleIndexError {
    #[error("index domain must be non-empty")]
    EmptyDomain,
    #[error("cannot index an empty tuple")]
    EmptyInput,
    #[error("element {value} is outside the domain [0, {domain})")]
    OutOfDomain { value: u64, domain: u64 },
    #[error("malformed canonical form: {0}")]
    Malformed(&'static str),
}

/// Uniform element bound `d`: every element lies in `[0, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexDomain {
    size: u64,
}

impl IndexDomain {
    pub fn new(size: u64) -> Result<Self, TupleIndexError> {
        if size == 0 {
            Err(TupleIndexError::EmptyDomain)
        } else {
            Ok(IndexDomain { size })
        }
    }

    pub fn size(self) -> u64 {
        self.size
    }
}

/// Marker written over repeated elements; sorts after every domain value.
const DUPLICATE: u64 = u64::MAX;

/// Index of the unordered set of elements in `tbl`.
///
/// Order and multiplicity of `tbl` do not affect the result.
pub fn tuple_index(tbl: &[u64], domain: IndexDomain) -> Result<BigUint, TupleIndexError> {
    if tbl.is_empty() {
        return Err(TupleIndexError::EmptyInput);
    }
    if let Some(&value) = tbl.iter().find(|&&v| v >= domain.size) {
        return Err(TupleIndexError::OutOfDomain {
            value,
            domain: domain.size,
        });
    }
    let distinct = distinct_sorted(tbl);
    Ok(weighted_sum(&distinct, &BigUint::from(domain.size)))
}

/// Sort, overwrite each repeat with the duplicate marker, sort again and cut
/// the tail at the first marker. Each pass is a data-parallel step (parallel
/// sort, per-cell neighbour comparison, parallel sort, prefix count of
/// surviving cells); here they run sequentially.
fn distinct_sorted(tbl: &[u64]) -> Vec<u64> {
    let mut work = tbl.to_vec();
    work.sort_unstable();
    let mut marked = work.clone();
    for i in 1..work.len() {
        if work[i] == work[i - 1] {
            marked[i] = DUPLICATE;
        }
    }
    marked.sort_unstable();
    let ts = marked.partition_point(|&v| v != DUPLICATE);
    marked.truncate(ts);
    marked
}

fn weighted_sum(sorted: &[u64], base: &BigUint) -> BigUint {
    // terms t_i·d^i, then a single summation
    let mut power = BigUint::one();
    let mut terms = Vec::with_capacity(sorted.len());
    for &t in sorted {
        terms.push(&power * t);
        power *= base;
    }
    terms.into_iter().fold(BigUint::zero(), |acc, t| acc + t)
}

/// Exact index of a state-marker-shaped key: a list of `(label, block set)`
/// pairs with strictly increasing labels and strictly sorted, non-empty block
/// sets.
///
/// Each block set is indexed over `block_domain`, each pair is encoded as
/// `label + |labels| · set_index`, and the outer set of pair codes is indexed
/// once more and shifted by one so the empty marker alone maps to zero.
pub fn tuple_index_nested<S: AsRef<[u64]>>(
    pairs: &[(u64, S)],
    label_domain: IndexDomain,
    block_domain: IndexDomain,
) -> Result<BigUint, TupleIndexError> {
    if pairs.is_empty() {
        return Ok(BigUint::zero());
    }
    let labels = BigUint::from(label_domain.size);
    let block_base = BigUint::from(block_domain.size);
    // every set over [0, b) has index below b^b
    let set_bound = num_traits::pow(block_base.clone(), block_domain.size as usize);
    let pair_domain = &labels * &set_bound;

    let mut codes = Vec::with_capacity(pairs.len());
    let mut previous: Option<u64> = None;
    for (label, blocks) in pairs {
        let blocks = blocks.as_ref();
        if previous.is_some_and(|p| p >= *label) {
            return Err(TupleIndexError::Malformed(
                "labels must be strictly increasing",
            ));
        }
        previous = Some(*label);
        if *label >= label_domain.size {
            return Err(TupleIndexError::OutOfDomain {
                value: *label,
                domain: label_domain.size,
            });
        }
        if blocks.is_empty() {
            return Err(TupleIndexError::Malformed("empty block set"));
        }
        if blocks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TupleIndexError::Malformed(
                "block set must be strictly sorted",
            ));
        }
        let set_index = tuple_index(blocks, block_domain)?;
        codes.push(BigUint::from(*label) + &labels * set_index);
    }
    // codes are distinct because labels are; sort them as big integers
    codes.sort_unstable();
    Ok(BigUint::one() + weighted_sum_big(&codes, &pair_domain))
}

fn weighted_sum_big(sorted: &[BigUint], base: &BigUint) -> BigUint {
    let mut power = BigUint::one();
    let mut acc = BigUint::zero();
    for t in sorted {
        acc += t * &power;
        power *= base;
    }
    acc
}

const FOLD_BASE: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit digest of a sorted, duplicate-free code sequence: the weighted sum
/// of mixed codes modulo 2^64. The empty sequence digests to zero.
#[inline]
pub fn folded_index(codes: impl IntoIterator<Item = u64>) -> u64 {
    let mut acc = 0u64;
    let mut weight = 1u64;
    let mut len = 0u64;
    for code in codes {
        acc = acc.wrapping_add(mix(code.wrapping_add(1)).wrapping_mul(weight));
        weight = weight.wrapping_mul(FOLD_BASE);
        len += 1;
    }
    if len == 0 {
        0
    } else {
        mix(acc ^ len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn d(n: u64) -> IndexDomain {
        IndexDomain::new(n).unwrap()
    }

    #[test]
    fn single_element_is_itself() {
        for x in 0..10 {
            assert_eq!(tuple_index(&[x], d(10)).unwrap(), BigUint::from(x));
        }
    }

    #[test]
    fn pair_and_duplicates() {
        assert_eq!(tuple_index(&[7, 3], d(10)).unwrap(), BigUint::from(73u32));
        assert_eq!(
            tuple_index(&[3, 3, 7], d(10)).unwrap(),
            BigUint::from(73u32)
        );
        assert_eq!(
            tuple_index(&[7, 3, 7, 3, 3], d(10)).unwrap(),
            BigUint::from(73u32)
        );
    }

    #[test]
    fn errors() {
        assert_eq!(IndexDomain::new(0), Err(TupleIndexError::EmptyDomain));
        assert_eq!(tuple_index(&[], d(3)), Err(TupleIndexError::EmptyInput));
        assert_eq!(
            tuple_index(&[1, 3], d(3)),
            Err(TupleIndexError::OutOfDomain {
                value: 3,
                domain: 3
            })
        );
    }

    #[test]
    fn distinct_pass_keeps_sorted_uniques() {
        assert_eq!(distinct_sorted(&[5, 1, 5, 0, 1, 9]), vec![0, 1, 5, 9]);
        assert_eq!(distinct_sorted(&[2, 2, 2]), vec![2]);
    }

    #[test]
    fn nested_empty_is_zero_and_order_free() {
        let dl = d(4);
        let db = d(8);
        let empty: [(u64, Vec<u64>); 0] = [];
        assert!(tuple_index_nested(&empty, dl, db).unwrap().is_zero());
        let a = tuple_index_nested(&[(0, vec![0])], dl, db).unwrap();
        assert!(!a.is_zero());
        let b = tuple_index_nested(&[(1, vec![2, 5]), (3, vec![0])], dl, db).unwrap();
        let c = tuple_index_nested(&[(1, vec![2, 5]), (3, vec![1])], dl, db).unwrap();
        assert_ne!(b, c);
    }

    #[test]
    fn nested_rejects_malformed() {
        let dl = d(4);
        let db = d(8);
        assert!(matches!(
            tuple_index_nested(&[(2, vec![1]), (1, vec![0])], dl, db),
            Err(TupleIndexError::Malformed(_))
        ));
        assert!(matches!(
            tuple_index_nested(&[(1, vec![3, 2])], dl, db),
            Err(TupleIndexError::Malformed(_))
        ));
        assert!(matches!(
            tuple_index_nested(&[(1, Vec::<u64>::new())], dl, db),
            Err(TupleIndexError::Malformed(_))
        ));
        assert!(matches!(
            tuple_index_nested(&[(4, vec![0])], dl, db),
            Err(TupleIndexError::OutOfDomain { value: 4, .. })
        ));
    }

    #[test]
    fn folded_empty_is_zero() {
        assert_eq!(folded_index(core::iter::empty()), 0);
        assert_ne!(folded_index([0]), 0);
        assert_ne!(folded_index([0, 1]), folded_index([1, 0]));
    }
}
