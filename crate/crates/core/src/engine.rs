//! Signature-initialized Mark–Split–Copy refinement.
//!
//! A run owns one [`Refiner`], which holds the partition plus the atomic mark
//! flags shared by Marking tasks. Each round is three barrier-separated
//! phases: all Marking tasks finish before any Splitting task starts, and all
//! Splitting tasks finish before Copy publishes the new state assignment.
//! Tasks only read `state_to_block` and never see each other's writes within
//! a phase; their outputs are merged after the barrier.

use alloc::vec;
use alloc::vec::Vec;
use core::num::NonZeroUsize;
use core::sync::atomic::{AtomicBool, AtomicU32, Ordering};
use core::time::Duration;

use thiserror::Error;

use crate::exec::Executor;
use crate::lts::{LabelId, Lts, Signature, StateId};
use crate::partition::{Block, BlockId, Partition, SplitsKey, Splitter};
use crate::tuple_index::folded_index;
use crate::FxHashMap;

/// How Marking decides that a predecessor block needs splitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MarkRule {
    /// Mark `P` only when `|P| > 1` and `P̄(a,S) ⊊ P`. Complete only if
    /// every piece of a split block becomes a splitter; combined with
    /// `omit_largest` it can stop before the partition is stable.
    ProperSubset,
    /// As [`ProperSubset`](MarkRule::ProperSubset), but when the splitter had
    /// a sibling withheld from the splitter set, every predecessor block with
    /// `|P| > 1` is marked, so the marker grouping can separate states whose
    /// edges into the withheld piece differ.
    #[default]
    SiblingAware,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub threads: NonZeroUsize,
    /// Withhold the largest piece of every split (after the first round)
    /// from the splitter set.
    pub omit_largest: bool,
    /// Keep per-state Splitting participation counters.
    pub instrument: bool,
    pub mark_rule: MarkRule,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            threads: NonZeroUsize::MIN,
            omit_largest: true,
            instrument: false,
            mark_rule: MarkRule::SiblingAware,
        }
    }
}

impl EngineConfig {
    pub fn with_threads(threads: NonZeroUsize) -> Self {
        EngineConfig {
            threads,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PhaseTimes {
    pub init: Duration,
    pub mark: Duration,
    pub split: Duration,
    pub copy: Duration,
}

impl PhaseTimes {
    pub fn total(&self) -> Duration {
        self.init + self.mark + self.split + self.copy
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunStats {
    /// Iterations of the Mark–Split–Copy loop, including the final one that
    /// found nothing to mark.
    pub rounds: usize,
    /// Blocks that Splitting divided into two or more pieces.
    pub splits: usize,
    /// For each state, how many times its block was processed by Splitting.
    /// Empty unless instrumentation was on.
    pub per_state_split_count: Vec<u32>,
    /// For each state, how many times it was a member of a splitter scanned
    /// by Marking. Empty unless instrumentation was on.
    pub per_state_splitter_count: Vec<u32>,
    pub phase_times: PhaseTimes,
}

impl RunStats {
    pub fn max_per_state_split_count(&self) -> u32 {
        self.per_state_split_count
            .iter()
            .copied()
            .max()
            .unwrap_or(0)
    }

    pub fn max_per_state_splitter_count(&self) -> u32 {
        self.per_state_splitter_count
            .iter()
            .copied()
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("block {0} reached Splitting with no marked states")]
    EmptyMarkedSet(BlockId),
    #[error("block {0} is not in the partition")]
    UnknownBlock(BlockId),
}

/// `m(v)`: the `(label, target block)` pairs of `v`'s outgoing transitions
/// against a fixed assignment.
///
/// Stored flat and sorted, which is the canonical form of the set of
/// `(label, {blocks})` entries; [`entries`](StateMarker::entries) gives the
/// nested view.
#[derive(Clone, Debug)]
pub struct StateMarker {
    pairs: Vec<(LabelId, BlockId)>,
    digest: u64,
}

impl StateMarker {
    pub fn compute(lts: &Lts, assignment: &[BlockId], v: StateId) -> Self {
        let mut pairs: Vec<(LabelId, BlockId)> = lts
            .out_edges(v)
            .iter()
            .map(|&(a, t)| (a, assignment[t.index()]))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        Self::from_sorted(pairs)
    }

    fn from_sorted(pairs: Vec<(LabelId, BlockId)>) -> Self {
        let digest = folded_index(
            pairs
                .iter()
                .map(|&(a, b)| (u64::from(a.0) << 32) | u64::from(b.0)),
        );
        StateMarker { pairs, digest }
    }

    pub fn pairs(&self) -> &[(LabelId, BlockId)] {
        &self.pairs
    }

    pub fn digest(&self) -> u64 {
        self.digest
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `(label, sorted block ids)` entries with strictly increasing labels.
    pub fn entries(&self) -> Vec<(LabelId, Vec<BlockId>)> {
        let mut out: Vec<(LabelId, Vec<BlockId>)> = Vec::new();
        for &(a, b) in &self.pairs {
            match out.last_mut() {
                Some((last, blocks)) if *last == a => blocks.push(b),
                _ => out.push((a, vec![b])),
            }
        }
        out
    }
}

impl PartialEq for StateMarker {
    fn eq(&self, other: &Self) -> bool {
        self.digest == other.digest && self.pairs == other.pairs
    }
}

impl Eq for StateMarker {}

impl core::hash::Hash for StateMarker {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        state.write_u64(self.digest);
    }
}

/// Result of one Marking task.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MarkOutcome {
    /// States this task marked first (each state is reported by one task).
    pub newly_marked: Vec<StateId>,
    /// Blocks this task added to the marked-block set first.
    pub new_marked_blocks: Vec<BlockId>,
    /// Number of `(label, block)` keys in the task's splits map.
    pub keys: usize,
}

/// Result of one Splitting task, applied after the Split barrier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitOutcome {
    pub block: BlockId,
    /// `M \ ms(M)`; empty means `M` leaves the partition.
    pub reduced: Vec<StateId>,
    /// Sub-blocks of marker-equal states, with freshly allocated ids.
    pub created: Vec<Block>,
    pub splitters: Vec<Splitter>,
    /// Entries for `next_state_to_block`.
    pub moves: Vec<(StateId, BlockId)>,
    /// The piece left out of the splitter set, if any.
    pub withheld: Option<BlockId>,
}

impl SplitOutcome {
    pub fn pieces(&self) -> usize {
        self.created.len() + usize::from(!self.reduced.is_empty())
    }
}

/// Hooks called at the phase barriers of each round.
pub trait RoundObserver {
    fn after_mark(&mut self, _round: usize, _partition: &Partition) {}
    /// `created` lists the sub-blocks made this round; `state_to_block` still
    /// holds the round-start assignment.
    fn after_split(&mut self, _round: usize, _partition: &Partition, _created: &[BlockId]) {}
    fn after_copy(&mut self, _round: usize, _partition: &Partition) {}
}

impl RoundObserver for () {}

/// Groups states by signature. Blocks are numbered in order of their
/// smallest member and all of them become splitters.
pub fn init_phase(lts: &Lts) -> Partition {
    let mut index: FxHashMap<Signature, u32> = FxHashMap::default();
    let mut blocks: Vec<Vec<StateId>> = Vec::new();
    for s in lts.states() {
        let sig = lts.signature_of(s);
        let next = blocks.len() as u32;
        let b = *index.entry(sig).or_insert(next);
        if b == next {
            blocks.push(Vec::new());
        }
        blocks[b as usize].push(s);
    }
    let mut partition = Partition::from_blocks(lts.num_states(), blocks)
        .expect("signature classes partition the states");
    partition.splitters = partition
        .blocks()
        .map(|b| Splitter {
            block: b.id(),
            sibling_withheld: false,
        })
        .collect();
    partition
}

/// Publishes `next_state_to_block` into `state_to_block`.
pub fn copy_phase(partition: &mut Partition) {
    for (s, b) in partition.next_state_to_block.drain(..) {
        partition.state_to_block[s.index()] = b;
    }
}

/// Partition plus the shared scratch of one refinement run.
pub struct Refiner<'a> {
    lts: &'a Lts,
    partition: Partition,
    config: EngineConfig,
    state_marked: Vec<AtomicBool>,
    block_marked: Vec<AtomicBool>,
    next_block: AtomicU32,
    round: usize,
    stats: RunStats,
}

impl<'a> Refiner<'a> {
    /// Starts from an arbitrary partition. Its splitter set is used as is.
    pub fn new(lts: &'a Lts, partition: Partition, config: EngineConfig) -> Self {
        assert_eq!(lts.num_states(), partition.num_states());
        let per_state = if config.instrument {
            vec![0; lts.num_states()]
        } else {
            Vec::new()
        };
        let next_block = AtomicU32::new(partition.block_id_bound() as u32);
        Refiner {
            lts,
            state_marked: (0..lts.num_states())
                .map(|_| AtomicBool::new(false))
                .collect(),
            block_marked: Vec::new(),
            partition,
            config,
            next_block,
            round: 0,
            stats: RunStats {
                per_state_split_count: per_state.clone(),
                per_state_splitter_count: per_state,
                ..RunStats::default()
            },
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// Starts a new round: advances the round counter and takes the splitter
    /// snapshot, leaving the splitter set empty for this round's additions.
    pub fn begin_round(&mut self) -> Vec<Splitter> {
        self.round += 1;
        let bound = self.partition.block_id_bound();
        if self.block_marked.len() < bound {
            self.block_marked
                .resize_with(bound, || AtomicBool::new(false));
        }
        let snapshot = core::mem::take(&mut self.partition.splitters);
        if self.config.instrument {
            for sp in &snapshot {
                if let Some(b) = self.partition.block(sp.block) {
                    for s in b.members() {
                        self.stats.per_state_splitter_count[s.index()] += 1;
                    }
                }
            }
        }
        snapshot
    }

    /// Marking for one splitter.
    ///
    /// Collects `P̄(a,S)` for every `(a, block(u))` key over the in-edges of
    /// the splitter, then marks the states of each key whose block fails the
    /// stability test. Mark flags are set atomically so concurrent tasks
    /// report each state and block once.
    pub fn mark(&self, splitter: Splitter) -> MarkOutcome {
        let Some(block) = self.partition.block(splitter.block) else {
            return MarkOutcome::default();
        };
        let mut splits: Vec<(SplitsKey, StateId)> = Vec::new();
        for &s in block.members() {
            for &(label, u) in self.lts.in_edges(s) {
                let key = SplitsKey {
                    label,
                    block: self.partition.block_of(u),
                };
                splits.push((key, u));
            }
        }
        splits.sort_unstable();
        splits.dedup();

        let force = self.config.mark_rule == MarkRule::SiblingAware && splitter.sibling_withheld;
        let mut out = MarkOutcome::default();
        for group in splits.chunk_by(|x, y| x.0 == y.0) {
            out.keys += 1;
            let key = group[0].0;
            let size = self.partition.block(key.block).map_or(0, Block::len);
            if size > 1 && (size > group.len() || force) {
                for &(_, u) in group {
                    if !self.state_marked[u.index()].swap(true, Ordering::Relaxed) {
                        out.newly_marked.push(u);
                    }
                }
                if !self.block_marked[key.block.index()].swap(true, Ordering::Relaxed) {
                    out.new_marked_blocks.push(key.block);
                }
            }
        }
        out
    }

    /// Adds the marks reported by Marking tasks to `ms(B)` and `ℳ`.
    pub fn record_marks(&mut self, outcomes: Vec<MarkOutcome>) {
        for out in outcomes {
            for u in out.newly_marked {
                let b = self.partition.state_to_block[u.index()];
                self.partition.blocks[b.index()]
                    .as_mut()
                    .expect("marked state belongs to a live block")
                    .marked
                    .push(u);
            }
            self.partition.marked_blocks.extend(out.new_marked_blocks);
        }
        self.partition.marked_blocks.sort_unstable();
    }

    /// Splitting for one marked block `M`.
    ///
    /// Marked states are grouped by their [`StateMarker`] against the
    /// round-start assignment; each group becomes a new block and `M` keeps
    /// the unmarked rest. From the second round on (with `omit_largest`) the
    /// largest piece, ties going to the piece holding the smallest state, is
    /// not added to the splitter set.
    pub fn split(&self, m: BlockId) -> Result<SplitOutcome, EngineError> {
        let block = self
            .partition
            .block(m)
            .ok_or(EngineError::UnknownBlock(m))?;
        if block.marked().is_empty() {
            return Err(EngineError::EmptyMarkedSet(m));
        }
        let mut marked = block.marked().to_vec();
        marked.sort_unstable();

        let mut group_of: FxHashMap<StateMarker, usize> = FxHashMap::default();
        let mut groups: Vec<Vec<StateId>> = Vec::new();
        for &v in &marked {
            let marker = StateMarker::compute(self.lts, &self.partition.state_to_block, v);
            let next = groups.len();
            let g = *group_of.entry(marker).or_insert(next);
            if g == next {
                groups.push(Vec::new());
            }
            groups[g].push(v);
        }

        let reduced: Vec<StateId> = block
            .members()
            .iter()
            .copied()
            .filter(|s| !self.state_marked[s.index()].load(Ordering::Relaxed))
            .collect();

        let created: Vec<Block> = groups
            .into_iter()
            .map(|members| Block {
                id: BlockId(self.next_block.fetch_add(1, Ordering::Relaxed)),
                members,
                marked: Vec::new(),
            })
            .collect();

        let withheld = if self.round >= 2 && self.config.omit_largest {
            let reduced_piece = (!reduced.is_empty()).then_some((m, &reduced));
            created
                .iter()
                .map(|b| (b.id, &b.members))
                .chain(reduced_piece)
                .max_by(|x, y| {
                    // members are ascending, so [0] is the smallest state
                    x.1.len().cmp(&y.1.len()).then(y.1[0].cmp(&x.1[0]))
                })
                .map(|(id, _)| id)
        } else {
            None
        };

        let sibling_withheld = withheld.is_some();
        let mut splitters: Vec<Splitter> = Vec::with_capacity(created.len() + 1);
        if !reduced.is_empty() && withheld != Some(m) {
            splitters.push(Splitter {
                block: m,
                sibling_withheld,
            });
        }
        let mut moves = Vec::with_capacity(marked.len());
        for b in &created {
            if withheld != Some(b.id) {
                splitters.push(Splitter {
                    block: b.id,
                    sibling_withheld,
                });
            }
            moves.extend(b.members.iter().map(|&s| (s, b.id)));
        }

        Ok(SplitOutcome {
            block: m,
            reduced,
            created,
            splitters,
            moves,
            withheld,
        })
    }

    /// Installs a Splitting result: replaces `M`, registers the new blocks
    /// and splitters, queues the moves and clears `M`'s marks.
    pub fn apply_split(&mut self, outcome: SplitOutcome) {
        let SplitOutcome {
            block: m,
            reduced,
            created,
            splitters,
            moves,
            ..
        } = outcome;
        let pieces = created.len() + usize::from(!reduced.is_empty());
        if pieces >= 2 {
            self.stats.splits += 1;
        }

        let slot = &mut self.partition.blocks[m.index()];
        let old = slot.as_mut().expect("split block is live");
        if self.config.instrument {
            for s in &old.members {
                self.stats.per_state_split_count[s.index()] += 1;
            }
        }
        for s in old.marked.drain(..) {
            self.state_marked[s.index()].store(false, Ordering::Relaxed);
        }
        self.block_marked[m.index()].store(false, Ordering::Relaxed);
        if reduced.is_empty() {
            *slot = None;
            self.partition.live -= 1;
        } else {
            old.members = reduced;
        }

        for b in created {
            let idx = b.id.index();
            if self.partition.blocks.len() <= idx {
                self.partition.blocks.resize_with(idx + 1, || None);
            }
            self.partition.blocks[idx] = Some(b);
            self.partition.live += 1;
        }
        self.partition.splitters.extend(splitters);
        self.partition.next_state_to_block.extend(moves);
    }

    pub fn copy(&mut self) {
        copy_phase(&mut self.partition);
    }

    pub fn into_parts(self) -> (Partition, RunStats) {
        (self.partition, self.stats)
    }

    /// Runs rounds until a Mark phase leaves `ℳ` empty.
    fn refine(&mut self, exec: &Executor, observer: &mut dyn RoundObserver) {
        loop {
            let snapshot = self.begin_round();
            let round = self.round;

            let clock = Stopwatch::start();
            let marks = exec.map(&snapshot, |&sp| self.mark(sp));
            self.record_marks(marks);
            self.stats.phase_times.mark += clock.elapsed();
            observer.after_mark(round, &self.partition);

            if self.partition.marked_blocks.is_empty() {
                break;
            }

            let clock = Stopwatch::start();
            let marked = core::mem::take(&mut self.partition.marked_blocks);
            let outcomes = exec.map(&marked, |&m| self.split(m));
            let mut created = Vec::new();
            for outcome in outcomes {
                let outcome = outcome.unwrap_or_else(|e| panic!("internal refinement error: {e}"));
                created.extend(outcome.created.iter().map(Block::id));
                self.apply_split(outcome);
            }
            self.stats.phase_times.split += clock.elapsed();
            observer.after_split(round, &self.partition, &created);

            let clock = Stopwatch::start();
            self.copy();
            self.stats.phase_times.copy += clock.elapsed();
            observer.after_copy(round, &self.partition);
        }
        self.stats.rounds = self.round;
    }
}

/// Coarsest bisimulation partition of `lts`.
pub fn run(lts: &Lts, config: &EngineConfig) -> (Partition, RunStats) {
    run_observed(lts, config, &mut ())
}

/// [`run`] with phase-barrier callbacks.
pub fn run_observed(
    lts: &Lts,
    config: &EngineConfig,
    observer: &mut dyn RoundObserver,
) -> (Partition, RunStats) {
    let clock = Stopwatch::start();
    let partition = init_phase(lts);
    let init_time = clock.elapsed();

    let mut refiner = Refiner::new(lts, partition, *config);
    refiner.stats.phase_times.init = init_time;
    // a single signature class is already the answer
    if refiner.partition.num_blocks() > 1 {
        let exec = Executor::new(config.threads.get());
        refiner.refine(&exec, observer);
    } else {
        refiner.partition.splitters.clear();
    }
    refiner.into_parts()
}

/// Whether `s1` and `s2` end in the same block of the coarsest partition.
pub fn bisimilar(lts: &Lts, s1: StateId, s2: StateId, config: &EngineConfig) -> bool {
    assert!(
        lts.contains_state(s1) && lts.contains_state(s2),
        "state out of range"
    );
    if s1 == s2 {
        return true;
    }
    let (partition, _) = run(lts, config);
    partition.same_block(s1, s2)
}

struct Stopwatch {
    #[cfg(feature = "std")]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Stopwatch {
            #[cfg(feature = "std")]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> Duration {
        #[cfg(feature = "std")]
        {
            self.start.elapsed()
        }
        #[cfg(not(feature = "std"))]
        {
            Duration::ZERO
        }
    }
}
