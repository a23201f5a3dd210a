//! Labelled transition systems with precomputed forward and reverse adjacency.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::tuple_index::folded_index;
use crate::FxHashMap;

/// Dense state index, `0 <= index < |S|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct StateId(pub u32);

impl StateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for StateId {
    fn from(value: usize) -> Self {
        StateId(value as u32)
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense label index into the alphabet of an [`Lts`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LabelId(pub u32);

impl LabelId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for LabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub src: StateId,
    pub label: LabelId,
    pub dst: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("state index out of range: {state} (|S| = {states})")]
    StateOutOfRange { state: u64, states: usize },
    #[error("chain length must be at least 1")]
    EmptyChain,
    #[error("cannot place {requested} distinct transitions, capacity is {capacity}")]
    InfeasibleTransitions { requested: u64, capacity: u128 },
    #[error("an LTS needs at least one state")]
    NoStates,
}

/// Set of outgoing labels of a state, strictly sorted, with a digest computed
/// once at construction.
#[derive(Clone, Debug)]
pub struct Signature {
    labels: Vec<LabelId>,
    digest: u64,
}

impl Signature {
    pub fn from_labels(mut labels: Vec<LabelId>) -> Self {
        labels.sort_unstable();
        labels.dedup();
        let digest = folded_index(labels.iter().map(|l| u64::from(l.0)));
        Signature { labels, digest }
    }

    pub fn labels(&self) -> &[LabelId] {
        &self.labels
    }

    pub fn digest(&self) -> u64 {
        self.digest
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl PartialEq for Signature {
    fn eq(&self, other: &Self) -> bool {
        self.digest == other.digest && self.labels == other.labels
    }
}

impl Eq for Signature {}

impl core::hash::Hash for Signature {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        state.write_u64(self.digest);
    }
}

/// An immutable labelled transition system.
///
/// Transitions are kept sorted by `(src, label, dst)` and free of duplicates.
/// Both adjacency directions are stored in CSR form: `out_edges(s)` is sorted
/// by `(label, dst)` and `in_edges(s)` by `(label, src)`.
#[derive(Clone, Debug)]
pub struct Lts {
    num_states: usize,
    initial: StateId,
    labels: Vec<String>,
    transitions: Vec<Transition>,
    out_offsets: Vec<usize>,
    out_edges: Vec<(LabelId, StateId)>,
    in_offsets: Vec<usize>,
    in_edges: Vec<(LabelId, StateId)>,
}

impl Lts {
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn states(&self) -> impl ExactSizeIterator<Item = StateId> + Clone {
        (0..self.num_states as u32).map(StateId)
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_text(&self, label: LabelId) -> &str {
        &self.labels[label.index()]
    }

    pub fn label_id(&self, text: &str) -> Option<LabelId> {
        self.labels
            .iter()
            .position(|l| l == text)
            .map(|i| LabelId(i as u32))
    }

    /// Outgoing `(label, dst)` pairs of `s`, sorted.
    #[inline]
    pub fn out_edges(&self, s: StateId) -> &[(LabelId, StateId)] {
        &self.out_edges[self.out_offsets[s.index()]..self.out_offsets[s.index() + 1]]
    }

    /// Incoming `(label, src)` pairs of `s`, sorted.
    #[inline]
    pub fn in_edges(&self, s: StateId) -> &[(LabelId, StateId)] {
        &self.in_edges[self.in_offsets[s.index()]..self.in_offsets[s.index() + 1]]
    }

    pub fn contains_state(&self, s: StateId) -> bool {
        s.index() < self.num_states
    }

    /// `sig(s)`: the set of labels on the outgoing transitions of `s`.
    pub fn signature_of(&self, s: StateId) -> Signature {
        let mut labels: Vec<LabelId> = Vec::new();
        for &(label, _) in self.out_edges(s) {
            // out_edges is label-sorted, so duplicates are adjacent
            if labels.last() != Some(&label) {
                labels.push(label);
            }
        }
        let digest = folded_index(labels.iter().map(|l| u64::from(l.0)));
        Signature { labels, digest }
    }
}

/// Incremental constructor for [`Lts`]; interns labels and collapses duplicate
/// triples on [`build`](LtsBuilder::build).
#[derive(Clone, Debug)]
pub struct LtsBuilder {
    num_states: usize,
    initial: StateId,
    labels: Vec<String>,
    label_index: FxHashMap<String, LabelId>,
    triples: Vec<Transition>,
}

impl LtsBuilder {
    pub fn new(num_states: usize) -> Self {
        LtsBuilder {
            num_states,
            initial: StateId(0),
            labels: Vec::new(),
            label_index: FxHashMap::default(),
            triples: Vec::new(),
        }
    }

    pub fn with_capacity(num_states: usize, transitions: usize) -> Self {
        let mut b = Self::new(num_states);
        b.triples.reserve(transitions);
        b
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn set_initial(&mut self, s: u64) -> Result<(), BuildError> {
        self.initial = self.check_state(s)?;
        Ok(())
    }

    pub fn intern(&mut self, text: &str) -> LabelId {
        if let Some(&id) = self.label_index.get(text) {
            return id;
        }
        let id = LabelId(self.labels.len() as u32);
        self.labels.push(text.to_string());
        self.label_index.insert(text.to_string(), id);
        id
    }

    fn check_state(&self, s: u64) -> Result<StateId, BuildError> {
        if s < self.num_states as u64 {
            Ok(StateId(s as u32))
        } else {
            Err(BuildError::StateOutOfRange {
                state: s,
                states: self.num_states,
            })
        }
    }

    /// Adds `src --label--> dst`, interning the label text.
    pub fn add(&mut self, src: u64, label: &str, dst: u64) -> Result<(), BuildError> {
        let label = self.intern(label);
        self.add_interned(src, label, dst)
    }

    pub fn add_interned(&mut self, src: u64, label: LabelId, dst: u64) -> Result<(), BuildError> {
        let src = self.check_state(src)?;
        let dst = self.check_state(dst)?;
        assert!(
            label.index() < self.labels.len(),
            "label {label} was not interned"
        );
        self.triples.push(Transition { src, label, dst });
        Ok(())
    }

    pub fn build(self) -> Lts {
        let LtsBuilder {
            num_states,
            initial,
            labels,
            mut triples,
            ..
        } = self;
        triples.sort_unstable();
        triples.dedup();

        let mut out_offsets = alloc::vec![0usize; num_states + 1];
        let mut in_offsets = alloc::vec![0usize; num_states + 1];
        for t in &triples {
            out_offsets[t.src.index() + 1] += 1;
            in_offsets[t.dst.index() + 1] += 1;
        }
        for i in 0..num_states {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }

        // triples are sorted by (src, label, dst), so a stable fill keeps
        // out_edges sorted by (label, dst) within each source
        let out_edges = triples.iter().map(|t| (t.label, t.dst)).collect();

        let mut fill = in_offsets.clone();
        let mut in_edges = alloc::vec![(LabelId(0), StateId(0)); triples.len()];
        for t in &triples {
            let slot = &mut fill[t.dst.index()];
            in_edges[*slot] = (t.label, t.src);
            *slot += 1;
        }
        for s in 0..num_states {
            in_edges[in_offsets[s]..in_offsets[s + 1]].sort_unstable();
        }

        Lts {
            num_states,
            initial,
            labels,
            transitions: triples,
            out_offsets,
            out_edges,
            in_offsets,
            in_edges,
        }
    }
}

/// Two disjoint `a`-labelled chains of `n` states each: `i -> i+1` for
/// `i` in `0..n-1` and in `n..2n-1`. States `0` and `n` are the chain heads.
pub fn gen_chain(n: usize) -> Result<Lts, BuildError> {
    if n == 0 {
        return Err(BuildError::EmptyChain);
    }
    let mut b = LtsBuilder::with_capacity(2 * n, 2 * (n - 1));
    let a = b.intern("a");
    for head in [0, n] {
        for i in head..head + n - 1 {
            b.add_interned(i as u64, a, i as u64 + 1)?;
        }
    }
    Ok(b.build())
}

/// Uniformly samples `n_transitions` distinct triples over `n_states` states
/// and labels `a0..a{n_labels-1}`. Deterministic for a fixed seed.
pub fn gen_random(
    n_states: usize,
    n_labels: usize,
    n_transitions: usize,
    seed: u64,
) -> Result<Lts, BuildError> {
    if n_states == 0 {
        return Err(BuildError::NoStates);
    }
    let capacity = (n_states as u128) * (n_states as u128) * (n_labels as u128);
    if n_transitions as u128 > capacity {
        return Err(BuildError::InfeasibleTransitions {
            requested: n_transitions as u64,
            capacity,
        });
    }
    let mut b = LtsBuilder::with_capacity(n_states, n_transitions);
    let labels: Vec<LabelId> = (0..n_labels)
        .map(|i| b.intern(&alloc::format!("a{i}")))
        .collect();
    if n_transitions == 0 {
        return Ok(b.build());
    }
    let capacity = usize::try_from(capacity).map_err(|_| BuildError::InfeasibleTransitions {
        requested: n_transitions as u64,
        capacity,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks: Vec<usize> = index::sample(&mut rng, capacity, n_transitions).into_vec();
    picks.sort_unstable();
    let per_src = n_states * n_labels;
    for code in picks {
        let src = code / per_src;
        let rest = code % per_src;
        let label = labels[rest / n_states];
        let dst = rest % n_states;
        b.add_interned(src as u64, label, dst as u64)?;
    }
    Ok(b.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn triples(lts: &Lts) -> Vec<(u32, u32, u32)> {
        lts.transitions()
            .iter()
            .map(|t| (t.src.0, t.label.0, t.dst.0))
            .collect()
    }

    #[test]
    fn signature_collapses_repeated_labels() {
        let mut b = LtsBuilder::new(4);
        b.add(0, "a", 1).unwrap();
        b.add(0, "a", 2).unwrap();
        b.add(0, "b", 3).unwrap();
        let lts = b.build();
        let sig = lts.signature_of(StateId(0));
        assert_eq!(sig.labels(), &[LabelId(0), LabelId(1)]);
        assert!(lts.signature_of(StateId(3)).is_empty());
        assert_eq!(
            sig,
            Signature::from_labels(vec![LabelId(1), LabelId(0), LabelId(1)])
        );
    }

    #[test]
    fn duplicates_collapse_at_build() {
        let mut b = LtsBuilder::new(2);
        b.add(0, "a", 1).unwrap();
        b.add(0, "a", 1).unwrap();
        b.add(0, "b", 1).unwrap();
        let lts = b.build();
        assert_eq!(lts.num_transitions(), 2);
        assert_eq!(lts.in_edges(StateId(1)).len(), 2);
    }

    #[test]
    fn out_of_range_state_rejected() {
        let mut b = LtsBuilder::new(2);
        assert_eq!(
            b.add(0, "a", 5),
            Err(BuildError::StateOutOfRange {
                state: 5,
                states: 2
            })
        );
    }

    #[test]
    fn chain_shapes() {
        assert_eq!(gen_chain(0).unwrap_err(), BuildError::EmptyChain);
        let one = gen_chain(1).unwrap();
        assert_eq!((one.num_states(), one.num_transitions()), (2, 0));

        let three = gen_chain(3).unwrap();
        assert_eq!((three.num_states(), three.num_transitions()), (6, 4));
        assert!(three.signature_of(StateId(2)).is_empty());
        assert!(three.signature_of(StateId(5)).is_empty());
        assert_eq!(three.signature_of(StateId(0)).labels(), &[LabelId(0)]);
        assert_eq!(
            triples(&three),
            vec![(0, 0, 1), (1, 0, 2), (3, 0, 4), (4, 0, 5)]
        );

        let big = gen_chain(1000).unwrap();
        assert_eq!((big.num_states(), big.num_transitions()), (2000, 1998));
    }

    #[test]
    fn random_generation() {
        let single = gen_random(1, 1, 0, 99).unwrap();
        assert_eq!((single.num_states(), single.num_transitions()), (1, 0));

        let a = gen_random(4, 2, 8, 42).unwrap();
        let b = gen_random(4, 2, 8, 42).unwrap();
        assert_eq!(triples(&a), triples(&b));

        let c = gen_random(16, 3, 40, 7).unwrap();
        assert_eq!(c.num_transitions(), 40);

        let full = gen_random(3, 2, 18, 1).unwrap();
        assert_eq!(full.num_transitions(), 18);
        assert!(matches!(
            gen_random(3, 2, 19, 1),
            Err(BuildError::InfeasibleTransitions { requested: 19, .. })
        ));
    }

    #[test]
    fn adjacency_is_consistent() {
        let lts = gen_random(20, 3, 90, 5).unwrap();
        let out: usize = lts.states().map(|s| lts.out_edges(s).len()).sum();
        let inn: usize = lts.states().map(|s| lts.in_edges(s).len()).sum();
        assert_eq!(out, lts.num_transitions());
        assert_eq!(inn, lts.num_transitions());
        for t in lts.transitions() {
            assert!(lts.out_edges(t.src).contains(&(t.label, t.dst)));
            assert!(lts.in_edges(t.dst).contains(&(t.label, t.src)));
        }
    }
}
