//! Memory-access traces in the Dinero "din" ASCII format, plus a seeded
//! synthetic generator for tests and demos.
//!
//! Each data line is `<label> <hex-address>` where the label is `0` (data
//! read), `1` (data write) or `2` (instruction fetch). Blank lines and lines
//! starting with `#` are skipped. Tokens after the address are ignored.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessKind {
    DataRead,
    DataWrite,
    InstrFetch,
}

impl AccessKind {
    pub fn label(self) -> u8 {
        match self {
            AccessKind::DataRead => 0,
            AccessKind::DataWrite => 1,
            AccessKind::InstrFetch => 2,
        }
    }

    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            0 => Some(AccessKind::DataRead),
            1 => Some(AccessKind::DataWrite),
            2 => Some(AccessKind::InstrFetch),
            _ => None,
        }
    }
}

/// One memory reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AccessRecord {
    pub kind: AccessKind,
    pub address: u64,
}

impl AccessRecord {
    pub fn new(kind: AccessKind, address: u64) -> Self {
        Self { kind, address }
    }
}

impl fmt::Display for AccessRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:x}", self.kind.label(), self.address)
    }
}

/// Why a single trace line failed to parse.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("empty record")]
    Empty,
    #[error("invalid label `{0}` (expected 0, 1 or 2)")]
    InvalidLabel(String),
    #[error("missing address field")]
    MissingAddress,
    #[error("unparsable address `{0}`")]
    InvalidAddress(String),
}

impl FromStr for AccessRecord {
    type Err = RecordError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let mut fields = line.split_whitespace();
        let label = fields.next().ok_or(RecordError::Empty)?;
        let kind = label
            .parse::<u8>()
            .ok()
            .and_then(AccessKind::from_label)
            .ok_or_else(|| RecordError::InvalidLabel(label.to_string()))?;
        let addr = fields.next().ok_or(RecordError::MissingAddress)?;
        let digits = addr
            .strip_prefix("0x")
            .or_else(|| addr.strip_prefix("0X"))
            .unwrap_or(addr);
        // from_str_radix tolerates a leading '+', din does not
        if digits.is_empty() || digits.starts_with('+') {
            return Err(RecordError::InvalidAddress(addr.to_string()));
        }
        let address = u64::from_str_radix(digits, 16)
            .map_err(|_| RecordError::InvalidAddress(addr.to_string()))?;
        Ok(AccessRecord { kind, address })
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: RecordError,
    },
    #[error("cannot read trace {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Parses one trace line; `line_no` is the 1-based position reported on error.
pub fn parse_record(line: &str, line_no: usize) -> Result<AccessRecord, TraceError> {
    line.trim().parse().map_err(|source| TraceError::Parse {
        line: line_no,
        source,
    })
}

#[derive(Clone, Debug)]
pub enum TraceOrigin {
    File(PathBuf),
    Memory(Arc<[AccessRecord]>),
}

/// Where records come from and how many of them to consume.
#[derive(Clone, Debug)]
pub struct TraceSource {
    pub origin: TraceOrigin,
    pub record_limit: Option<NonZeroUsize>,
}

impl TraceSource {
    pub fn file(path: impl Into<PathBuf>) -> Self {
        Self {
            origin: TraceOrigin::File(path.into()),
            record_limit: None,
        }
    }

    pub fn memory(records: impl Into<Arc<[AccessRecord]>>) -> Self {
        Self {
            origin: TraceOrigin::Memory(records.into()),
            record_limit: None,
        }
    }

    pub fn with_limit(mut self, limit: Option<NonZeroUsize>) -> Self {
        self.record_limit = limit;
        self
    }

    /// Lazily yields records in order, stopping at the record limit.
    pub fn stream(&self) -> Result<RecordStream, TraceError> {
        let inner = match &self.origin {
            TraceOrigin::File(path) => {
                let file = File::open(path).map_err(|source| TraceError::Io {
                    path: path.clone(),
                    source,
                })?;
                StreamInner::File {
                    path: path.clone(),
                    lines: BufReader::new(file).lines(),
                    line_no: 0,
                }
            }
            TraceOrigin::Memory(records) => StreamInner::Memory {
                records: records.clone(),
                pos: 0,
            },
        };
        Ok(RecordStream {
            inner,
            remaining: self.record_limit.map(NonZeroUsize::get),
        })
    }

    /// Reads the whole (truncated) trace into memory.
    pub fn load(&self) -> Result<Vec<AccessRecord>, TraceError> {
        self.stream()?.collect()
    }
}

enum StreamInner {
    File {
        path: PathBuf,
        lines: std::io::Lines<BufReader<File>>,
        line_no: usize,
    },
    Memory {
        records: Arc<[AccessRecord]>,
        pos: usize,
    },
}

pub struct RecordStream {
    inner: StreamInner,
    remaining: Option<usize>,
}

impl Iterator for RecordStream {
    type Item = Result<AccessRecord, TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == Some(0) {
            return None;
        }
        let item = match &mut self.inner {
            StreamInner::Memory { records, pos } => {
                let rec = records.get(*pos).copied()?;
                *pos += 1;
                Ok(rec)
            }
            StreamInner::File {
                path,
                lines,
                line_no,
            } => loop {
                let line = match lines.next()? {
                    Ok(line) => line,
                    Err(source) => {
                        // stop after reporting, a broken reader will not recover
                        self.remaining = Some(0);
                        break Err(TraceError::Io {
                            path: path.clone(),
                            source,
                        });
                    }
                };
                *line_no += 1;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    continue;
                }
                break parse_record(trimmed, *line_no);
            },
        };
        if let Some(n) = self.remaining.as_mut() {
            if item.is_ok() {
                *n -= 1;
            }
        }
        Some(item)
    }
}

/// Writes records in din format, one per line.
pub fn write_din(path: &Path, records: &[AccessRecord]) -> std::io::Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(File::create(path)?);
    for rec in records {
        writeln!(out, "{rec}")?;
    }
    out.flush()
}

/// SHA-256 over the canonical binary form of a record sequence.
pub fn digest(records: &[AccessRecord]) -> String {
    let mut hasher = Sha256::new();
    for rec in records {
        hasher.update([rec.kind.label()]);
        hasher.update(rec.address.to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Address pattern of a synthetic trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pattern {
    /// `start`, `start + stride`, `start + 2*stride`, ...
    Sequential { start: u64, stride: u64 },
    /// Uniform over `[low, high)`.
    Uniform { low: u64, high: u64 },
    /// Strided walk over a `working_set`-byte region starting at `base`, repeated.
    Loop {
        base: u64,
        working_set: u64,
        stride: u64,
    },
}

/// Fractions of instruction fetches, data reads and data writes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mix {
    pub instr: f64,
    pub read: f64,
    pub write: f64,
}

impl Mix {
    pub const INSTR_ONLY: Mix = Mix {
        instr: 1.0,
        read: 0.0,
        write: 0.0,
    };
    pub const READ_ONLY: Mix = Mix {
        instr: 0.0,
        read: 1.0,
        write: 0.0,
    };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub pattern: Pattern,
    pub mix: Mix,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("record count must be positive")]
    ZeroCount,
    #[error("address range has zero width")]
    EmptyRange,
    #[error("mix ratios must be non-negative and sum to 1 (got {0})")]
    InvalidMix(f64),
}

const MIX_TOLERANCE: f64 = 1e-9;

/// Deterministic synthetic trace: a pure function of `(spec, count, seed)`.
pub fn synth_trace(
    spec: &SynthSpec,
    count: usize,
    seed: u64,
) -> Result<Vec<AccessRecord>, SynthError> {
    if count == 0 {
        return Err(SynthError::ZeroCount);
    }
    let Mix { instr, read, write } = spec.mix;
    let sum = instr + read + write;
    if [instr, read, write]
        .iter()
        .any(|r| !r.is_finite() || *r < 0.0)
        || (sum - 1.0).abs() > MIX_TOLERANCE
    {
        return Err(SynthError::InvalidMix(sum));
    }
    match spec.pattern {
        Pattern::Uniform { low, high } if high <= low => return Err(SynthError::EmptyRange),
        Pattern::Loop { working_set: 0, .. } => return Err(SynthError::EmptyRange),
        _ => {}
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count as u64 {
        let address = match spec.pattern {
            Pattern::Sequential { start, stride } => start.wrapping_add(i.wrapping_mul(stride)),
            Pattern::Uniform { low, high } => rng.gen_range(low..high),
            Pattern::Loop {
                base,
                working_set,
                stride,
            } => {
                let stride = stride.max(1);
                let steps = working_set.div_ceil(stride);
                base.wrapping_add((i % steps) * stride)
            }
        };
        let kind = if instr >= 1.0 {
            AccessKind::InstrFetch
        } else if read >= 1.0 {
            AccessKind::DataRead
        } else if write >= 1.0 {
            AccessKind::DataWrite
        } else {
            let draw: f64 = rng.gen();
            if draw < instr {
                AccessKind::InstrFetch
            } else if draw < instr + read {
                AccessKind::DataRead
            } else {
                AccessKind::DataWrite
            }
        };
        out.push(AccessRecord { kind, address });
    }
    Ok(out)
}

/// Round-robin merge; shorter streams drop out once exhausted.
pub fn interleave(streams: &[Vec<AccessRecord>]) -> Vec<AccessRecord> {
    let total = streams.iter().map(Vec::len).sum();
    let mut out = Vec::with_capacity(total);
    let longest = streams.iter().map(Vec::len).max().unwrap_or(0);
    for i in 0..longest {
        for s in streams {
            if let Some(rec) = s.get(i) {
                out.push(*rec);
            }
        }
    }
    out
}
