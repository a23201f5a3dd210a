//! File formats, benchmarking and the command-line front end for
//! [`bisim_core`].
//!
//! * [`aut`] reads and writes Aldebaran `.aut` files.
//! * [`export`] renders partitions and run statistics as text or JSON.
//! * [`bench`] times the engine across thread counts.
//! * [`selftest`] checks the tuple index for collisions.
//! * [`cli`] implements the `bisim` binary.

pub mod aut;
pub mod bench;
pub mod cli;
pub mod export;
pub mod selftest;

pub use aut::{parse_aut, read_aut, to_aut_string, write_aut, AutError};
pub use bench::{bench_lts, BenchConfig, BenchError, BenchReport, BenchRow};
