//! Partition state shared by the refinement engine, and the stability
//! predicates used to check its output.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::lts::{LabelId, Lts, StateId};

/// Block identifier, unique within one refinement run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BlockId(pub u32);

impl BlockId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B{}", self.0)
    }
}

/// Key of an a-predecessor set during marking: `(label, predecessor block)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SplitsKey {
    pub label: LabelId,
    pub block: BlockId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub(crate) id: BlockId,
    pub(crate) members: Vec<StateId>,
    /// Marked states `ms(B)`, always a subset of `members`.
    pub(crate) marked: Vec<StateId>,
}

impl Block {
    pub fn id(&self) -> BlockId {
        self.id
    }

    pub fn members(&self) -> &[StateId] {
        &self.members
    }

    pub fn marked(&self) -> &[StateId] {
        &self.marked
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Entry of the splitter set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Splitter {
    pub block: BlockId,
    /// Set when a sibling piece from the same split was left out of the
    /// splitter set.
    pub sibling_withheld: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("unknown block id {0}")]
    UnknownBlock(BlockId),
    #[error("partitions cover different state counts ({0} vs {1})")]
    StateCountMismatch(usize, usize),
    #[error("block {0} is empty")]
    EmptyBlock(BlockId),
    #[error("state {0} is out of range")]
    StateOutOfRange(StateId),
    #[error("state {0} belongs to more than one block")]
    Overlap(StateId),
    #[error("state {0} belongs to no block")]
    Uncovered(StateId),
    #[error("state {state} is assigned to {assigned} but listed in {listed}")]
    Inconsistent {
        state: StateId,
        assigned: BlockId,
        listed: BlockId,
    },
    #[error("marked state {state} is not a member of {block}")]
    StrayMark { state: StateId, block: BlockId },
    #[error("found {counted} live blocks, recorded {recorded}")]
    LiveCount { counted: usize, recorded: usize },
}

/// Current partition of the state set.
///
/// `blocks` is indexed by block id (`blockById`); removed blocks leave a
/// hole so ids are never reused. `next_state_to_block` holds the moves
/// produced by the current Split phase until the Copy phase publishes them.
#[derive(Clone, Debug)]
pub struct Partition {
    pub(crate) blocks: Vec<Option<Block>>,
    pub(crate) state_to_block: Vec<BlockId>,
    pub(crate) next_state_to_block: Vec<(StateId, BlockId)>,
    pub(crate) splitters: Vec<Splitter>,
    pub(crate) marked_blocks: Vec<BlockId>,
    pub(crate) live: usize,
}

impl Partition {
    /// Builds a partition from explicit blocks; ids are assigned in order.
    pub fn from_blocks(
        num_states: usize,
        blocks: Vec<Vec<StateId>>,
    ) -> Result<Self, PartitionError> {
        const UNSET: BlockId = BlockId(u32::MAX);
        let mut state_to_block = vec![UNSET; num_states];
        let mut out = Vec::with_capacity(blocks.len());
        for (i, members) in blocks.into_iter().enumerate() {
            let id = BlockId(i as u32);
            if members.is_empty() {
                return Err(PartitionError::EmptyBlock(id));
            }
            for &s in &members {
                let slot = state_to_block
                    .get_mut(s.index())
                    .ok_or(PartitionError::StateOutOfRange(s))?;
                if *slot != UNSET {
                    return Err(PartitionError::Overlap(s));
                }
                *slot = id;
            }
            out.push(Some(Block {
                id,
                members,
                marked: Vec::new(),
            }));
        }
        if let Some(s) = state_to_block.iter().position(|&b| b == UNSET) {
            return Err(PartitionError::Uncovered(StateId(s as u32)));
        }
        let live = out.len();
        Ok(Partition {
            blocks: out,
            state_to_block,
            next_state_to_block: Vec::new(),
            splitters: Vec::new(),
            marked_blocks: Vec::new(),
            live,
        })
    }

    /// Groups states by equal `class[s]` values; blocks are numbered in order
    /// of their smallest member.
    pub fn from_assignment(class: &[u32]) -> Self {
        let mut remap = crate::FxHashMap::default();
        let mut blocks: Vec<Vec<StateId>> = Vec::new();
        for (s, &c) in class.iter().enumerate() {
            let idx = *remap.entry(c).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[idx].push(StateId(s as u32));
        }
        Self::from_blocks(class.len(), blocks).expect("assignment always forms a partition")
    }

    pub fn single_block(num_states: usize) -> Self {
        Self::from_assignment(&vec![0; num_states])
    }

    pub fn singletons(num_states: usize) -> Self {
        let class: Vec<u32> = (0..num_states as u32).collect();
        Self::from_assignment(&class)
    }

    pub fn num_states(&self) -> usize {
        self.state_to_block.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.live
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().flatten()
    }

    pub fn block(&self, id: BlockId) -> Option<&Block> {
        self.blocks.get(id.index()).and_then(Option::as_ref)
    }

    /// Block of `s` in the published (round-start) assignment.
    #[inline]
    pub fn block_of(&self, s: StateId) -> BlockId {
        self.state_to_block[s.index()]
    }

    pub fn state_to_block(&self) -> &[BlockId] {
        &self.state_to_block
    }

    /// Moves recorded by Splitting and not yet published by Copy.
    pub fn pending_moves(&self) -> &[(StateId, BlockId)] {
        &self.next_state_to_block
    }

    pub fn splitters(&self) -> &[Splitter] {
        &self.splitters
    }

    pub fn marked_blocks(&self) -> &[BlockId] {
        &self.marked_blocks
    }

    /// Upper bound (exclusive) of the block ids allocated so far.
    pub fn block_id_bound(&self) -> usize {
        self.blocks.len()
    }

    pub fn contains(&self, id: BlockId) -> bool {
        self.block(id).is_some()
    }

    pub fn same_block(&self, a: StateId, b: StateId) -> bool {
        self.block_of(a) == self.block_of(b)
    }

    /// Full-scan check of the partition invariant: live blocks are non-empty,
    /// pairwise disjoint, cover every state, marks stay inside their block,
    /// and the assignment (with pending moves applied) matches membership.
    pub fn check_invariant(&self) -> Result<(), PartitionError> {
        let n = self.num_states();
        let mut effective = self.state_to_block.clone();
        for &(s, b) in &self.next_state_to_block {
            *effective
                .get_mut(s.index())
                .ok_or(PartitionError::StateOutOfRange(s))? = b;
        }
        let mut seen: Vec<Option<BlockId>> = vec![None; n];
        let mut live = 0;
        for (i, slot) in self.blocks.iter().enumerate() {
            let Some(block) = slot else { continue };
            live += 1;
            if block.id.index() != i {
                return Err(PartitionError::UnknownBlock(block.id));
            }
            if block.members.is_empty() {
                return Err(PartitionError::EmptyBlock(block.id));
            }
            for &s in &block.members {
                let entry = seen
                    .get_mut(s.index())
                    .ok_or(PartitionError::StateOutOfRange(s))?;
                if entry.is_some() {
                    return Err(PartitionError::Overlap(s));
                }
                *entry = Some(block.id);
                if effective[s.index()] != block.id {
                    return Err(PartitionError::Inconsistent {
                        state: s,
                        assigned: effective[s.index()],
                        listed: block.id,
                    });
                }
            }
        }
        for b in self.blocks.iter().flatten() {
            for &s in &b.marked {
                if seen.get(s.index()).copied().flatten() != Some(b.id) {
                    return Err(PartitionError::StrayMark {
                        state: s,
                        block: b.id,
                    });
                }
            }
        }
        if let Some(s) = seen.iter().position(Option::is_none) {
            return Err(PartitionError::Uncovered(StateId(s as u32)));
        }
        if live != self.live {
            return Err(PartitionError::LiveCount {
                counted: live,
                recorded: self.live,
            });
        }
        Ok(())
    }

    /// Membership lists by block, with `state -> block index` derived from
    /// the lists themselves rather than the stored assignment.
    fn membership_classes(&self) -> (Vec<&Block>, Vec<u32>) {
        let mut blocks: Vec<&Block> = self.blocks().collect();
        blocks.sort_by_key(|b| b.members.iter().min().copied());
        let mut class = vec![0u32; self.num_states()];
        for (i, b) in blocks.iter().enumerate() {
            for &s in &b.members {
                class[s.index()] = i as u32;
            }
        }
        (blocks, class)
    }
}

/// `P̄(a, S)`: the states of `P` with an `a`-transition into `S`.
///
/// A direct scan over the transition list.
pub fn a_predecessors(
    lts: &Lts,
    partition: &Partition,
    p: BlockId,
    a: LabelId,
    s: BlockId,
) -> Result<Vec<StateId>, PartitionError> {
    let pb = partition.block(p).ok_or(PartitionError::UnknownBlock(p))?;
    let sb = partition.block(s).ok_or(PartitionError::UnknownBlock(s))?;
    let mut in_p = vec![false; lts.num_states()];
    let mut in_s = vec![false; lts.num_states()];
    for &u in &pb.members {
        in_p[u.index()] = true;
    }
    for &t in &sb.members {
        in_s[t.index()] = true;
    }
    let mut out: Vec<StateId> = lts
        .transitions()
        .iter()
        .filter(|t| t.label == a && in_p[t.src.index()] && in_s[t.dst.index()])
        .map(|t| t.src)
        .collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Witness that block `block` is not `label`-stable with respect to `splitter`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StabilityViolation {
    pub block: BlockId,
    pub label: LabelId,
    pub splitter: BlockId,
}

/// Checks that for all blocks `P`, `S` and labels `a`, `P̄(a,S)` is either
/// `P` or empty. On failure returns the violation with the smallest block
/// (by least member), then smallest `(label, splitter)` pair.
pub fn is_stable(lts: &Lts, partition: &Partition) -> Result<(), StabilityViolation> {
    let (blocks, class) = partition.membership_classes();
    let pairs_of = |u: StateId| -> Vec<(LabelId, u32)> {
        let mut v: Vec<(LabelId, u32)> = lts
            .out_edges(u)
            .iter()
            .map(|&(a, t)| (a, class[t.index()]))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    for block in &blocks {
        let Some((&first, rest)) = block.members.split_first() else {
            continue;
        };
        let reference = pairs_of(first);
        let mut worst: Option<(LabelId, u32)> = None;
        for &u in rest {
            let other = pairs_of(u);
            if other == reference {
                continue;
            }
            let diff = reference
                .iter()
                .filter(|p| other.binary_search(p).is_err())
                .chain(other.iter().filter(|p| reference.binary_search(p).is_err()))
                .min()
                .copied();
            worst = match (worst, diff) {
                (Some(w), Some(d)) => Some(w.min(d)),
                (w, d) => w.or(d),
            };
        }
        if let Some((label, target)) = worst {
            return Err(StabilityViolation {
                block: block.id,
                label,
                splitter: blocks[target as usize].id,
            });
        }
    }
    Ok(())
}

pub type CanonicalForm = Vec<Vec<u32>>;

/// Block ids erased: each block as a sorted member list, blocks sorted by
/// their smallest member.
pub fn canonical_form(partition: &Partition) -> CanonicalForm {
    let mut out: CanonicalForm = partition
        .blocks()
        .map(|b| {
            let mut m: Vec<u32> = b.members.iter().map(|s| s.0).collect();
            m.sort_unstable();
            m
        })
        .collect();
    out.sort_unstable_by_key(|b| b[0]);
    out
}

/// Whether every block of `finer` lies inside one block of `coarser`.
pub fn refines(finer: &Partition, coarser: &Partition) -> Result<bool, PartitionError> {
    if finer.num_states() != coarser.num_states() {
        return Err(PartitionError::StateCountMismatch(
            finer.num_states(),
            coarser.num_states(),
        ));
    }
    let (_, coarse_class) = coarser.membership_classes();
    Ok(finer.blocks().all(|b| {
        let c = coarse_class[b.members[0].index()];
        b.members.iter().all(|s| coarse_class[s.index()] == c)
    }))
}
