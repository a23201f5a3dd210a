//! Text and JSON renderings of partitions and run statistics.

use std::fmt::Write as _;

use bisim_core::engine::PhaseTimes;
use bisim_core::{canonical_form, Partition, RunStats};
use serde::Serialize;

/// One line per block, blocks ordered by smallest member, state ids
/// separated by single spaces.
pub fn partition_text(partition: &Partition) -> String {
    let mut out = String::new();
    for block in canonical_form(partition) {
        let mut first = true;
        for s in block {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{s}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

/// The canonical form as a JSON array of arrays.
pub fn partition_json(partition: &Partition) -> String {
    serde_json::to_string(&canonical_form(partition)).expect("integers serialize")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseTimesMs {
    pub init: f64,
    pub mark: f64,
    pub split: f64,
    pub copy: f64,
    pub total: f64,
}

impl From<&PhaseTimes> for PhaseTimesMs {
    fn from(t: &PhaseTimes) -> Self {
        let ms = |d: std::time::Duration| d.as_secs_f64() * 1e3;
        PhaseTimesMs {
            init: ms(t.init),
            mark: ms(t.mark),
            split: ms(t.split),
            copy: ms(t.copy),
            total: ms(t.total()),
        }
    }
}

/// Serializable summary of a [`RunStats`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunStatsSummary {
    pub rounds: usize,
    pub splits: usize,
    pub max_per_state_split_count: u32,
    pub max_per_state_splitter_count: u32,
    pub phase_times_ms: PhaseTimesMs,
}

impl From<&RunStats> for RunStatsSummary {
    fn from(s: &RunStats) -> Self {
        RunStatsSummary {
            rounds: s.rounds,
            splits: s.splits,
            max_per_state_split_count: s.max_per_state_split_count(),
            max_per_state_splitter_count: s.max_per_state_splitter_count(),
            phase_times_ms: PhaseTimesMs::from(&s.phase_times),
        }
    }
}

pub fn stats_json(stats: &RunStats) -> String {
    serde_json::to_string_pretty(&RunStatsSummary::from(stats)).expect("plain data serializes")
}
