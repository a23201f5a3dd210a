//! The `bisim` command line.
//!
//! Exit codes: `0` success (or `bisimilar`), `1` not bisimilar, `2` usage or
//! input error, `3` internal invariant violation.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use bisim_core::oracle::verify_quotient;
use bisim_core::{
    check_transfer, gen_chain, gen_random, is_stable, oracle_partition, quotient, run,
    EngineConfig, Lts, Partition, StateId,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::aut::{read_aut, write_aut};
use crate::bench::{bench_lts, BenchConfig, BenchReport};
use crate::export::{partition_json, partition_text, stats_json};
use crate::selftest::{run_selftest, SelftestConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NOT_BISIMILAR: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "bisim",
    version,
    about = "Strong bisimulation minimization of labelled transition systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize an .aut file and write its quotient
    Min(MinArgs),
    /// Decide whether two states are bisimilar
    Check(CheckArgs),
    /// Generate an .aut file
    #[command(subcommand)]
    Gen(GenCommand),
    /// Time the engine across thread counts
    Bench(BenchArgs),
    /// Check the tuple index for collisions
    #[command(hide = true)]
    TupleIndex(TupleIndexArgs),
}

#[derive(Debug, Args)]
pub struct ThreadArgs {
    /// Worker threads [default: available parallelism]
    #[arg(long, env = "BISIM_THREADS")]
    pub threads: Option<NonZeroUsize>,
}

impl ThreadArgs {
    fn resolve(&self) -> NonZeroUsize {
        self.threads
            .unwrap_or_else(|| std::thread::available_parallelism().unwrap_or(NonZeroUsize::MIN))
    }
}

#[derive(Debug, Args)]
pub struct MinArgs {
    pub input: PathBuf,
    /// Quotient output file [default: stdout]
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub threads: ThreadArgs,
    /// Re-check stability, transfer and the quotient before writing
    #[arg(long)]
    pub verify: bool,
    /// Also write the final partition to this file
    #[arg(long)]
    pub partition: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PartitionFormat::Text)]
    pub partition_format: PartitionFormat,
    /// Write run statistics as JSON to this file
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PartitionFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub input: PathBuf,
    pub s1: u64,
    pub s2: u64,
    #[command(flatten)]
    pub threads: ThreadArgs,
    /// Cross-check the verdict with the reference fixpoint
    #[arg(long)]
    pub oracle: bool,
    /// Re-check stability and transfer of the computed partition
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Two disjoint a-chains of N states each
    Chain {
        n: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Uniformly random distinct transitions
    Random {
        states: usize,
        labels: usize,
        transitions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Comma-separated thread counts
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub threads: Vec<NonZeroUsize>,
    #[arg(long, default_value_t = 2)]
    pub warmup: usize,
    #[arg(long, default_value_t = 3)]
    pub measured: usize,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
    /// Report file [default: stdout]
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TupleIndexArgs {
    #[arg(long, default_value_t = 12)]
    pub universe: u32,
    #[arg(long, default_value_t = 10_000)]
    pub multisets: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

fn input_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn load(path: &Path) -> Result<Lts, CliError> {
    let file = File::open(path).map_err(|e| input_error(path, e))?;
    read_aut(BufReader::new(file)).map_err(|e| input_error(path, e))
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| input_error(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|()| w.flush())
        .map_err(|e| input_error(path, e))
}

fn output_error(e: io::Error) -> CliError {
    CliError::Input(format!("writing output: {e}"))
}

/// Stability and transfer of a computed partition.
fn validate(lts: &Lts, partition: &Partition) -> Result<(), CliError> {
    if let Err(v) = is_stable(lts, partition) {
        return Err(CliError::Internal(format!(
            "partition is not stable: block {} is split by block {} on label `{}`",
            v.block,
            v.splitter,
            lts.label_text(v.label)
        )));
    }
    if let Err(w) = check_transfer(lts, partition) {
        return Err(CliError::Internal(format!(
            "transfer violated: {} --{}--> {} is not matched by {}",
            w.u,
            lts.label_text(w.label),
            w.target,
            w.v
        )));
    }
    Ok(())
}

/// Runs a parsed command; returns the exit code on success.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8, CliError> {
    match &cli.command {
        Command::Min(args) => cmd_min(args, out, err),
        Command::Check(args) => cmd_check(args, out),
        Command::Gen(kind) => cmd_gen(kind, out),
        Command::Bench(args) => cmd_bench(args, out, err),
        Command::TupleIndex(args) => cmd_tuple_index(args, out),
    }
}

fn cmd_min(args: &MinArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8, CliError> {
    let lts = load(&args.input)?;
    let config = EngineConfig::with_threads(args.threads.resolve());
    let (partition, stats) = run(&lts, &config);
    if args.verify {
        validate(&lts, &partition)?;
    }
    let q = quotient(&lts, &partition).map_err(|e| CliError::Internal(e.to_string()))?;
    if args.verify {
        if let Err(s) = verify_quotient(&lts, &q) {
            return Err(CliError::Internal(format!(
                "state {s} is not bisimilar to its quotient image"
            )));
        }
    }

    if let Some(path) = &args.partition {
        let text = match args.partition_format {
            PartitionFormat::Text => partition_text(&partition),
            PartitionFormat::Json => partition_json(&partition) + "\n",
        };
        write_file(path, |w| w.write_all(text.as_bytes()))?;
    }
    if let Some(path) = &args.stats {
        let json = stats_json(&stats);
        write_file(path, |w| writeln!(w, "{json}"))?;
    }
    let summary = format!(
        "states: {}, transitions: {}, blocks: {}, rounds: {}",
        lts.num_states(),
        lts.num_transitions(),
        partition.num_blocks(),
        stats.rounds
    );
    match &args.output {
        Some(path) => {
            write_file(path, |w| write_aut(&q.lts, w))?;
            writeln!(out, "{summary}").map_err(output_error)?;
        }
        None => {
            write_aut(&q.lts, &mut *out).map_err(output_error)?;
            writeln!(err, "{summary}").map_err(output_error)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_check(args: &CheckArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let lts = load(&args.input)?;
    let state = |s: u64| -> Result<StateId, CliError> {
        u32::try_from(s)
            .ok()
            .map(StateId)
            .filter(|&id| lts.contains_state(id))
            .ok_or_else(|| {
                CliError::Input(format!(
                    "state index out of range: {s} (the system has {} states)",
                    lts.num_states()
                ))
            })
    };
    let (s1, s2) = (state(args.s1)?, state(args.s2)?);
    let config = EngineConfig::with_threads(args.threads.resolve());
    let (partition, _) = run(&lts, &config);
    if args.verify {
        validate(&lts, &partition)?;
    }
    let verdict = partition.same_block(s1, s2);
    if args.oracle {
        let expected = oracle_partition(&lts).same_block(s1, s2);
        if expected != verdict {
            return Err(CliError::Internal(format!(
                "engine says {}, reference fixpoint says {}",
                verdict_text(verdict),
                verdict_text(expected)
            )));
        }
    }
    writeln!(out, "{}", verdict_text(verdict)).map_err(output_error)?;
    Ok(if verdict { EXIT_OK } else { EXIT_NOT_BISIMILAR })
}

fn verdict_text(bisimilar: bool) -> &'static str {
    if bisimilar {
        "bisimilar"
    } else {
        "not-bisimilar"
    }
}

fn cmd_gen(kind: &GenCommand, out: &mut dyn Write) -> Result<u8, CliError> {
    let (lts, output) = match kind {
        GenCommand::Chain { n, output } => (gen_chain(*n), output),
        GenCommand::Random {
            states,
            labels,
            transitions,
            seed,
            output,
        } => (gen_random(*states, *labels, *transitions, *seed), output),
    };
    let lts = lts.map_err(|e| CliError::Input(e.to_string()))?;
    match output {
        Some(path) => write_file(path, |w| write_aut(&lts, w))?,
        None => write_aut(&lts, out).map_err(output_error)?,
    }
    Ok(EXIT_OK)
}

fn cmd_bench(args: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8, CliError> {
    let config = BenchConfig {
        threads: args.threads.clone(),
        warmup: args.warmup,
        measured: args.measured,
    };
    let mut report = BenchReport::new(&config);
    for path in &args.inputs {
        let lts = load(path)?;
        let name = path.display().to_string();
        writeln!(
            err,
            "{name}: {} states, {} transitions",
            lts.num_states(),
            lts.num_transitions()
        )
        .map_err(output_error)?;
        let rows = bench_lts(&name, &lts, &config).map_err(|e| match e {
            crate::bench::BenchError::Disagreement { .. } => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        })?;
        report.rows.extend(rows);
    }
    let write = |w: &mut dyn Write| match args.format {
        ReportFormat::Csv => report.write_csv(w),
        ReportFormat::Json => report.write_json(w),
    };
    let result = match &args.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| input_error(path, e))?;
            write(&mut BufWriter::new(file))
        }
        None => write(out),
    };
    result.map_err(|e| CliError::Input(e.to_string()))?;
    Ok(EXIT_OK)
}

fn cmd_tuple_index(args: &TupleIndexArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let config = SelftestConfig {
        universe: args.universe,
        multisets: args.multisets,
        seed: args.seed,
    };
    let summary = run_selftest(&config).map_err(|e| match e {
        crate::selftest::SelftestError::Universe(_) => CliError::Input(e.to_string()),
        other => CliError::Internal(other.to_string()),
    })?;
    writeln!(
        out,
        "tuple-index: {} subsets pairwise distinct, {} multisets order- and duplicate-invariant",
        summary.subsets, summary.multisets
    )
    .map_err(output_error)?;
    Ok(EXIT_OK)
}

/// Parses `args`, runs the command and reports errors on `err`.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = write!(err, "{}", e.render().ansi());
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
