//! Coarsest bisimulation partitions of labelled transition systems.
//!
//! The refinement engine starts from the partition induced by state
//! signatures (the set of outgoing labels) and then repeats a three-phase
//! round until no block needs splitting:
//!
//! 1. **Mark**: every splitter block is scanned through its incoming edges and
//!    predecessor blocks that are not stable with respect to it get their
//!    offending states marked.
//! 2. **Split**: every marked block is divided by grouping its marked states
//!    on their state markers, the set of `(label, target blocks)` pairs.
//! 3. **Copy**: the new state-to-block assignment is published for the next
//!    round.
//!
//! After the first round only the pieces of a split block other than the
//! largest one are used as splitters.
//!
//! The crate is `no_std` (with `alloc`). The `parallel` feature runs the Mark
//! and Split phases on a worker pool; without it every run is sequential.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod engine;
pub mod lts;
pub mod oracle;
pub mod partition;
pub mod tuple_index;

mod exec;

pub use engine::{
    bisimilar, run, run_observed, EngineConfig, MarkRule, RoundObserver, RunStats, StateMarker,
};
pub use lts::{
    gen_chain, gen_random, BuildError, LabelId, Lts, LtsBuilder, Signature, StateId, Transition,
};
pub use oracle::{check_transfer, oracle_partition, quotient, QuotientLts};
pub use partition::{canonical_form, is_stable, refines, Block, BlockId, Partition, SplitsKey};

pub(crate) type FxHashMap<K, V> = hashbrown::HashMap<K, V, rustc_hash::FxBuildHasher>;
