//! Aldebaran (`.aut`) reader and writer.
//!
//! ```text
//! des (<initial>, <#transitions>, <#states>)
//! (<from>, "<label>", <to>)
//! (<from>, <label>, <to>)
//! ```
//!
//! Whitespace around commas and CRLF line endings are accepted, blank lines
//! are skipped. Output uses LF, always quotes labels and lists transitions by
//! source, label text and target, so it depends only on the transition set.

use std::fmt;
use std::io::{self, BufRead, Write};

use bisim_core::{BuildError, Lts, LtsBuilder};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {kind}")]
    Syntax { line: usize, kind: SyntaxError },
}

impl AutError {
    pub fn line(&self) -> Option<usize> {
        match self {
            AutError::Io(_) => None,
            AutError::Syntax { line, .. } => Some(*line),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    MissingHeader,
    MalformedHeader,
    MalformedTransition,
    BadNumber(String),
    UnterminatedLabel,
    StateOutOfRange { state: u64, states: usize },
    CountMismatch { declared: usize, found: usize },
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntaxError::MissingHeader => write!(f, "missing `des` header"),
            SyntaxError::MalformedHeader => {
                write!(
                    f,
                    "malformed header, expected `des (<init>, <#trans>, <#states>)`"
                )
            }
            SyntaxError::MalformedTransition => {
                write!(
                    f,
                    "malformed transition, expected `(<from>, <label>, <to>)`"
                )
            }
            SyntaxError::BadNumber(s) => write!(f, "invalid number `{s}`"),
            SyntaxError::UnterminatedLabel => write!(f, "unterminated quoted label"),
            SyntaxError::StateOutOfRange { state, states } => {
                write!(
                    f,
                    "state index out of range: {state} (declared {states} states)"
                )
            }
            SyntaxError::CountMismatch { declared, found } => write!(
                f,
                "transition count mismatch: header declares {declared}, found {found}"
            ),
        }
    }
}

fn syntax(line: usize, kind: SyntaxError) -> AutError {
    AutError::Syntax { line, kind }
}

fn number(line: usize, text: &str) -> Result<u64, AutError> {
    let text = text.trim();
    text.parse()
        .map_err(|_| syntax(line, SyntaxError::BadNumber(text.to_string())))
}

struct Header {
    initial: u64,
    transitions: usize,
    states: usize,
}

fn parse_header(line: usize, text: &str) -> Result<Header, AutError> {
    let rest = text
        .trim()
        .strip_prefix("des")
        .ok_or_else(|| syntax(line, SyntaxError::MissingHeader))?;
    let inner = rest
        .trim()
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| syntax(line, SyntaxError::MalformedHeader))?;
    let fields: Vec<&str> = inner.split(',').collect();
    let [init, trans, states] = fields[..] else {
        return Err(syntax(line, SyntaxError::MalformedHeader));
    };
    Ok(Header {
        initial: number(line, init)?,
        transitions: number(line, trans)? as usize,
        states: number(line, states)? as usize,
    })
}

/// Splits `(<from>, <label>, <to>)` into its three fields; the label is
/// returned without quotes.
fn parse_transition(line: usize, text: &str) -> Result<(u64, &str, u64), AutError> {
    let malformed = || syntax(line, SyntaxError::MalformedTransition);
    let inner = text
        .trim()
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(malformed)?;
    let (src, rest) = inner.split_once(',').ok_or_else(malformed)?;
    let rest = rest.trim_start();
    let (label, tail) = if let Some(quoted) = rest.strip_prefix('"') {
        let close = quoted
            .rfind('"')
            .ok_or_else(|| syntax(line, SyntaxError::UnterminatedLabel))?;
        let tail = quoted[close + 1..].trim_start();
        let tail = tail.strip_prefix(',').ok_or_else(|| {
            // a quote that is not followed by the final field was never closed
            if quoted[close + 1..].contains(',') {
                malformed()
            } else {
                syntax(line, SyntaxError::UnterminatedLabel)
            }
        })?;
        (&quoted[..close], tail)
    } else {
        let (label, tail) = rest.rsplit_once(',').ok_or_else(malformed)?;
        (label.trim(), tail)
    };
    Ok((number(line, src)?, label, number(line, tail)?))
}

/// Reads an Aldebaran stream. Duplicate triples collapse in the result.
pub fn read_aut<R: BufRead>(reader: R) -> Result<Lts, AutError> {
    let mut lines = reader.lines().enumerate();
    let (header_line, header) = loop {
        match lines.next() {
            Some((i, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                break (i + 1, parse_header(i + 1, &line)?);
            }
            None => return Err(syntax(1, SyntaxError::MissingHeader)),
        }
    };
    let mut builder = LtsBuilder::with_capacity(header.states, header.transitions);
    builder
        .set_initial(header.initial)
        .map_err(|e| build_error(header_line, e))?;
    let mut found = 0usize;
    let mut last_line = header_line;
    for (i, line) in lines {
        let line = line?;
        let number = i + 1;
        last_line = number;
        if line.trim().is_empty() {
            continue;
        }
        found += 1;
        if found > header.transitions {
            return Err(syntax(
                number,
                SyntaxError::CountMismatch {
                    declared: header.transitions,
                    found,
                },
            ));
        }
        let (src, label, dst) = parse_transition(number, &line)?;
        builder
            .add(src, label, dst)
            .map_err(|e| build_error(number, e))?;
    }
    if found != header.transitions {
        return Err(syntax(
            last_line,
            SyntaxError::CountMismatch {
                declared: header.transitions,
                found,
            },
        ));
    }
    Ok(builder.build())
}

fn build_error(line: usize, e: BuildError) -> AutError {
    match e {
        BuildError::StateOutOfRange { state, states } => {
            syntax(line, SyntaxError::StateOutOfRange { state, states })
        }
        _ => syntax(line, SyntaxError::MalformedTransition),
    }
}

pub fn parse_aut(text: &str) -> Result<Lts, AutError> {
    read_aut(text.as_bytes())
}

pub fn write_aut<W: Write>(lts: &Lts, mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "des ({},{},{})",
        lts.initial(),
        lts.num_transitions(),
        lts.num_states()
    )?;
    let mut by_text: Vec<usize> = (0..lts.num_labels()).collect();
    by_text.sort_by_key(|&i| &lts.labels()[i]);
    let mut rank = vec![0u32; by_text.len()];
    for (r, &i) in by_text.iter().enumerate() {
        rank[i] = r as u32;
    }
    let mut order: Vec<_> = lts.transitions().iter().collect();
    order.sort_by_key(|t| (t.src, rank[t.label.index()], t.dst));
    for t in order {
        writeln!(out, "({},\"{}\",{})", t.src, lts.label_text(t.label), t.dst)?;
    }
    out.flush()
}

pub fn to_aut_string(lts: &Lts) -> String {
    let mut buf = Vec::new();
    write_aut(lts, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("labels are UTF-8")
}
