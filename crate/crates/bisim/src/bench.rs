//! Timing harness: for every thread count, a number of discarded warm-up
//! runs followed by measured runs whose wall times are averaged. Only the
//! engine run is timed; parsing and validation are not.
//!
//! Every run's canonical partition is compared with the first one, and a
//! disagreement aborts the benchmark.

use std::io;
use std::num::NonZeroUsize;
use std::time::Instant;

use bisim_core::partition::CanonicalForm;
use bisim_core::{canonical_form, run, EngineConfig, Lts};
use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchConfig {
    pub threads: Vec<NonZeroUsize>,
    pub warmup: usize,
    pub measured: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            threads: [1, 2, 4, 8]
                .into_iter()
                .map(|t| NonZeroUsize::new(t).expect("non-zero"))
                .collect(),
            warmup: 2,
            measured: 3,
        }
    }
}

/// One `(input, thread count)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub input: String,
    pub states: usize,
    pub transitions: usize,
    pub threads: usize,
    pub mean_ms: f64,
    /// Mean time of the smallest thread count divided by this row's.
    pub speedup: f64,
    pub rounds: usize,
    pub max_split_count: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BenchReport {
    pub warmup: usize,
    pub measured: usize,
    pub rows: Vec<BenchRow>,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("thread list is empty")]
    NoThreads,
    #[error("at least one measured run is required")]
    NoMeasuredRuns,
    #[error(
        "{input}: partition with {threads} threads ({blocks} blocks) differs from the \
         reference run with {reference_threads} threads ({reference_blocks} blocks)"
    )]
    Disagreement {
        input: String,
        threads: usize,
        blocks: usize,
        reference_threads: usize,
        reference_blocks: usize,
    },
    #[error("writing report: {0}")]
    Io(#[from] io::Error),
    #[error("writing report: {0}")]
    Csv(#[from] csv::Error),
}

impl BenchConfig {
    fn validate(&self) -> Result<(), BenchError> {
        if self.threads.is_empty() {
            return Err(BenchError::NoThreads);
        }
        if self.measured == 0 {
            return Err(BenchError::NoMeasuredRuns);
        }
        Ok(())
    }
}

/// Benchmarks one system for every configured thread count.
pub fn bench_lts(
    input: &str,
    lts: &Lts,
    config: &BenchConfig,
) -> Result<Vec<BenchRow>, BenchError> {
    config.validate()?;
    let mut threads = config.threads.clone();
    threads.sort_unstable();
    threads.dedup();

    // statistics come from one untimed instrumented run
    let instrumented = EngineConfig {
        instrument: true,
        ..EngineConfig::with_threads(threads[0])
    };
    let (partition, stats) = run(lts, &instrumented);
    let reference: CanonicalForm = canonical_form(&partition);
    let reference_threads = threads[0].get();

    let mut rows: Vec<BenchRow> = Vec::with_capacity(threads.len());
    for &t in &threads {
        let engine = EngineConfig::with_threads(t);
        let mut total = 0.0;
        for i in 0..config.warmup + config.measured {
            let start = Instant::now();
            let (p, _) = run(lts, &engine);
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            if i >= config.warmup {
                total += elapsed;
            }
            let form = canonical_form(&p);
            if form != reference {
                return Err(BenchError::Disagreement {
                    input: input.to_string(),
                    threads: t.get(),
                    blocks: form.len(),
                    reference_threads,
                    reference_blocks: reference.len(),
                });
            }
        }
        let mean_ms = total / config.measured as f64;
        let base = rows.first().map_or(mean_ms, |r| r.mean_ms);
        rows.push(BenchRow {
            input: input.to_string(),
            states: lts.num_states(),
            transitions: lts.num_transitions(),
            threads: t.get(),
            mean_ms,
            speedup: if rows.is_empty() { 1.0 } else { base / mean_ms },
            rounds: stats.rounds,
            max_split_count: stats.max_per_state_split_count(),
        });
    }
    Ok(rows)
}

impl BenchReport {
    pub fn new(config: &BenchConfig) -> Self {
        BenchReport {
            warmup: config.warmup,
            measured: config.measured,
            rows: Vec::new(),
        }
    }

    /// `input,states,transitions,threads,mean_ms,speedup,rounds,max_split_count`
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(HEADER)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: io::Write>(&self, mut out: W) -> Result<(), BenchError> {
        serde_json::to_writer_pretty(&mut out, self).map_err(io::Error::from)?;
        writeln!(out)?;
        Ok(())
    }
}

const HEADER: [&str; 8] = [
    "input",
    "states",
    "transitions",
    "threads",
    "mean_ms",
    "speedup",
    "rounds",
    "max_split_count",
];

#[cfg(test)]
mod tests {
    use super::*;
    use bisim_core::gen_chain;

    fn nz(n: usize) -> NonZeroUsize {
        NonZeroUsize::new(n).unwrap()
    }

    #[test]
    fn single_thread_row_has_unit_speedup() {
        let lts = gen_chain(4).unwrap();
        let config = BenchConfig {
            threads: vec![nz(1)],
            ..BenchConfig::default()
        };
        let rows = bench_lts("chain4", &lts, &config).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].speedup, 1.0);
        assert_eq!((rows[0].states, rows[0].transitions), (8, 6));
    }

    #[test]
    fn csv_header_is_fixed() {
        let lts = gen_chain(2).unwrap();
        let config = BenchConfig {
            threads: vec![nz(2), nz(1)],
            warmup: 0,
            measured: 1,
        };
        let mut report = BenchReport::new(&config);
        report.rows = bench_lts("c", &lts, &config).unwrap();
        assert_eq!(report.rows[0].threads, 1);
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), HEADER.join(","));
        assert_eq!(text.lines().count(), 3);

        let mut empty = Vec::new();
        BenchReport::default().write_csv(&mut empty).unwrap();
        assert_eq!(
            String::from_utf8(empty).unwrap().trim_end(),
            HEADER.join(",")
        );
    }

    #[test]
    fn rejects_degenerate_configs() {
        let lts = gen_chain(2).unwrap();
        let no_threads = BenchConfig {
            threads: vec![],
            ..BenchConfig::default()
        };
        assert!(matches!(
            bench_lts("c", &lts, &no_threads),
            Err(BenchError::NoThreads)
        ));
        let no_runs = BenchConfig {
            measured: 0,
            ..BenchConfig::default()
        };
        assert!(matches!(
            bench_lts("c", &lts, &no_runs),
            Err(BenchError::NoMeasuredRuns)
        ));
    }
}
