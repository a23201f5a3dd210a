//! Slow reference implementations used as ground truth for the engine.
//!
//! Nothing here touches the engine; only the [`Lts`] and [`Partition`] types
//! are shared. Everything iterates states in ascending order so repeated runs
//! agree exactly.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::lts::{LabelId, Lts, LtsBuilder, StateId};
use crate::partition::Partition;

/// Naive fixpoint refinement: starting from one block, re-key every state by
/// its current block and the set of `(label, block of target)` pairs until the
/// number of blocks stops growing. At most `|S|` passes of `O(|T| log |T|)`.
pub fn oracle_partition(lts: &Lts) -> Partition {
    let n = lts.num_states();
    let mut class = vec![0u32; n];
    let mut count = usize::from(n > 0);
    loop {
        let mut keys: BTreeMap<(u32, Vec<(u32, u32)>), u32> = BTreeMap::new();
        let mut next = vec![0u32; n];
        for s in 0..n {
            let mut moves: Vec<(u32, u32)> = lts
                .out_edges(StateId(s as u32))
                .iter()
                .map(|&(a, t)| (a.0, class[t.index()]))
                .collect();
            moves.sort_unstable();
            moves.dedup();
            let fresh = keys.len() as u32;
            next[s] = *keys.entry((class[s], moves)).or_insert(fresh);
        }
        class = next;
        if keys.len() == count {
            break;
        }
        count = keys.len();
    }
    Partition::from_assignment(&class)
}

/// `u --label--> target` has no matching `label`-move from `v` into the
/// block of `target`, although `u` and `v` share a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransferViolation {
    pub u: StateId,
    pub v: StateId,
    pub label: LabelId,
    pub target: StateId,
}

fn classes(partition: &Partition) -> Vec<u32> {
    let mut class = vec![u32::MAX; partition.num_states()];
    for (i, b) in partition.blocks().enumerate() {
        for &s in b.members() {
            class[s.index()] = i as u32;
        }
    }
    class
}

/// Checks both transfer clauses of a bisimulation one step deep, reading the
/// partition as the relation "same block".
///
/// Each member is compared in both directions against the first member of
/// its block; since matching is an equivalence on move sets this covers all
/// pairs.
pub fn check_transfer(lts: &Lts, partition: &Partition) -> Result<(), TransferViolation> {
    let class = classes(partition);
    let unmatched = |x: StateId, y: StateId| -> Option<TransferViolation> {
        lts.out_edges(x).iter().find_map(|&(a, x2)| {
            let matched = lts
                .out_edges(y)
                .iter()
                .any(|&(b, y2)| b == a && class[y2.index()] == class[x2.index()]);
            (!matched).then_some(TransferViolation {
                u: x,
                v: y,
                label: a,
                target: x2,
            })
        })
    };
    let mut blocks: Vec<&[StateId]> = partition.blocks().map(|b| b.members()).collect();
    blocks.sort_by_key(|m| m.iter().min().copied());
    for members in blocks {
        let Some(&rep) = members.iter().min() else {
            continue;
        };
        for &v in members {
            if v == rep {
                continue;
            }
            if let Some(w) = unmatched(rep, v).or_else(|| unmatched(v, rep)) {
                return Err(w);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuotientError {
    #[error("partition is not a bisimulation: {u} --{label}--> {target} is not matched by {v}")]
    Unstable {
        u: StateId,
        v: StateId,
        label: LabelId,
        target: StateId,
    },
    #[error("partition covers {partition} states, the LTS has {lts}")]
    SizeMismatch { partition: usize, lts: usize },
}

/// The minimized system: one state per block.
#[derive(Clone, Debug)]
pub struct QuotientLts {
    pub lts: Lts,
    /// Quotient state of every original state.
    pub block_of: Vec<StateId>,
}

/// Builds the quotient of `lts` by a stable `partition`. Quotient states are
/// numbered by the smallest original member of their block, and the label
/// table is carried over unchanged.
pub fn quotient(lts: &Lts, partition: &Partition) -> Result<QuotientLts, QuotientError> {
    if partition.num_states() != lts.num_states() {
        return Err(QuotientError::SizeMismatch {
            partition: partition.num_states(),
            lts: lts.num_states(),
        });
    }
    check_transfer(lts, partition).map_err(|w| QuotientError::Unstable {
        u: w.u,
        v: w.v,
        label: w.label,
        target: w.target,
    })?;

    let mut blocks: Vec<&[StateId]> = partition.blocks().map(|b| b.members()).collect();
    blocks.sort_by_key(|m| m.iter().min().copied());
    let mut block_of = vec![StateId(0); lts.num_states()];
    for (i, members) in blocks.iter().enumerate() {
        for &s in members.iter() {
            block_of[s.index()] = StateId(i as u32);
        }
    }

    let mut b = LtsBuilder::with_capacity(blocks.len(), lts.num_transitions());
    for text in lts.labels() {
        b.intern(text);
    }
    for t in lts.transitions() {
        let src = block_of[t.src.index()];
        let dst = block_of[t.dst.index()];
        b.add_interned(u64::from(src.0), t.label, u64::from(dst.0))
            .expect("block indices are in range");
    }
    if lts.num_states() > 0 {
        b.set_initial(u64::from(block_of[lts.initial().index()].0))
            .expect("initial block is in range");
    }
    Ok(QuotientLts {
        lts: b.build(),
        block_of,
    })
}

/// `left` followed by `right` with its states shifted by `|S_left|`; labels
/// are matched by text.
pub fn disjoint_union(left: &Lts, right: &Lts) -> Lts {
    let offset = left.num_states() as u64;
    let mut b = LtsBuilder::with_capacity(
        left.num_states() + right.num_states(),
        left.num_transitions() + right.num_transitions(),
    );
    for t in left.transitions() {
        b.add(
            u64::from(t.src.0),
            left.label_text(t.label),
            u64::from(t.dst.0),
        )
        .expect("in range");
    }
    for t in right.transitions() {
        b.add(
            offset + u64::from(t.src.0),
            right.label_text(t.label),
            offset + u64::from(t.dst.0),
        )
        .expect("in range");
    }
    b.build()
}

/// Checks that every state of `lts` is bisimilar to its quotient image by
/// running [`oracle_partition`] on the disjoint union. Returns the first
/// state that is not.
pub fn verify_quotient(lts: &Lts, q: &QuotientLts) -> Result<(), StateId> {
    let union = disjoint_union(lts, &q.lts);
    let p = oracle_partition(&union);
    let offset = lts.num_states() as u32;
    for s in lts.states() {
        let image = StateId(offset + q.block_of[s.index()].0);
        if !p.same_block(s, image) {
            return Err(s);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lts::gen_chain;
    use crate::partition::{canonical_form, is_stable};

    fn two_cycle() -> Lts {
        let mut b = LtsBuilder::new(2);
        b.add(0, "a", 1).unwrap();
        b.add(1, "a", 0).unwrap();
        b.build()
    }

    #[test]
    fn oracle_small_cases() {
        let one = LtsBuilder::new(1).build();
        assert_eq!(canonical_form(&oracle_partition(&one)), vec![vec![0]]);
        assert_eq!(
            canonical_form(&oracle_partition(&two_cycle())),
            vec![vec![0, 1]]
        );
        let chain = gen_chain(4).unwrap();
        assert_eq!(
            canonical_form(&oracle_partition(&chain)),
            vec![vec![0, 4], vec![1, 5], vec![2, 6], vec![3, 7]]
        );
    }

    #[test]
    fn oracle_output_is_stable() {
        let lts = crate::lts::gen_random(30, 2, 60, 3).unwrap();
        let p = oracle_partition(&lts);
        assert!(is_stable(&lts, &p).is_ok());
        assert!(check_transfer(&lts, &p).is_ok());
    }

    #[test]
    fn transfer_examples() {
        let chain = gen_chain(2).unwrap();
        assert!(check_transfer(&chain, &Partition::singletons(4)).is_ok());
        let w = check_transfer(&chain, &Partition::single_block(4)).unwrap_err();
        assert_eq!((w.u, w.v, w.target), (StateId(0), StateId(1), StateId(1)));
        assert_eq!(chain.label_text(w.label), "a");
    }

    #[test]
    fn quotient_examples() {
        let cycle = two_cycle();
        let q = quotient(&cycle, &Partition::single_block(2)).unwrap();
        assert_eq!(q.lts.num_states(), 1);
        assert_eq!(q.lts.num_transitions(), 1);
        assert_eq!(q.lts.out_edges(StateId(0)), &[(LabelId(0), StateId(0))]);

        let q = quotient(&cycle, &Partition::singletons(2)).unwrap();
        assert_eq!(q.lts.transitions(), cycle.transitions());

        let chain = gen_chain(5).unwrap();
        let p = oracle_partition(&chain);
        let q = quotient(&chain, &p).unwrap();
        assert_eq!((q.lts.num_states(), q.lts.num_transitions()), (5, 4));
        verify_quotient(&chain, &q).unwrap();

        assert!(matches!(
            quotient(&chain, &Partition::single_block(10)),
            Err(QuotientError::Unstable { .. })
        ));
    }

    #[test]
    fn oracle_is_idempotent_on_quotient() {
        let lts = crate::lts::gen_random(24, 2, 40, 11).unwrap();
        let q = quotient(&lts, &oracle_partition(&lts)).unwrap();
        let again = oracle_partition(&q.lts);
        assert_eq!(again.num_blocks(), q.lts.num_states());
    }
}
