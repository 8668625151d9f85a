//! Hashing-time measurements over corpus units.
//!
//! Each unit is hashed once as warm-up, then `repetitions` timed times on a
//! monotonic clock. A unit's time is the median of its repetitions; the
//! per-kind figures aggregate those medians.

use std::fs::{self, File};
use std::io::{self, Cursor};
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CorpusUnit, UnitKind};
use crate::digest::{compute_digest, compute_digest_streaming};

pub const DEFAULT_CHUNK_SIZE: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMode {
    InMemory,
    StreamingFromFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    pub repetitions: usize,
    pub mode: BenchMode,
    pub chunk_size: usize,
}

impl BenchConfig {
    pub fn new(repetitions: usize, mode: BenchMode) -> Self {
        Self {
            repetitions,
            mode,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub unit_kind: UnitKind,
    pub mode: BenchMode,
    pub min_ms: f64,
    pub max_ms: f64,
    pub mean_ms: f64,
    pub median_ms: f64,
    /// Number of units of this kind.
    pub n: usize,
    pub repetitions: usize,
    /// Streaming and in-memory digests agreed for every unit.
    pub digest_consistency: bool,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("repetitions must be at least 1")]
    ZeroRepetitions,
    #[error("no units to benchmark")]
    NoUnits,
    #[error("streaming I/O: {0}")]
    Io(#[from] io::Error),
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    if samples.len() % 2 == 0 {
        (samples[mid - 1] + samples[mid]) / 2.0
    } else {
        samples[mid]
    }
}

struct UnitTiming {
    kind: UnitKind,
    median_ms: f64,
    consistent: bool,
}

fn time_unit(
    unit: &CorpusUnit,
    config: &BenchConfig,
    file: Option<&PathBuf>,
) -> Result<UnitTiming, BenchError> {
    let bytes = unit.text.as_bytes();
    let in_memory = compute_digest(bytes);
    let streamed = match file {
        Some(path) => compute_digest_streaming(File::open(path)?, config.chunk_size)?,
        None => compute_digest_streaming(Cursor::new(bytes), config.chunk_size)?,
    };
    let mut samples = Vec::with_capacity(config.repetitions);
    for _ in 0..config.repetitions {
        let start = Instant::now();
        let digest = match file {
            Some(path) => compute_digest_streaming(File::open(path)?, config.chunk_size)?,
            None => compute_digest(bytes),
        };
        samples.push(millis(start));
        std::hint::black_box(digest);
    }
    Ok(UnitTiming {
        kind: unit.kind,
        median_ms: median(&mut samples),
        consistent: in_memory == streamed,
    })
}

/// Times every unit and aggregates per kind, in kind order.
pub fn bench_hash(units: &[CorpusUnit], config: &BenchConfig) -> Result<Vec<BenchResult>, BenchError> {
    if config.repetitions == 0 {
        return Err(BenchError::ZeroRepetitions);
    }
    if units.is_empty() {
        return Err(BenchError::NoUnits);
    }
    let dir = match config.mode {
        BenchMode::StreamingFromFile => Some(tempfile::tempdir()?),
        BenchMode::InMemory => None,
    };
    let mut timings = Vec::with_capacity(units.len());
    for (i, unit) in units.iter().enumerate() {
        let file = match &dir {
            Some(dir) => {
                let path = dir.path().join(format!("{i}.txt"));
                fs::write(&path, unit.text.as_bytes())?;
                Some(path)
            }
            None => None,
        };
        timings.push(time_unit(unit, config, file.as_ref())?);
    }

    let mut results = Vec::new();
    for kind in [UnitKind::Ayah, UnitKind::Surah, UnitKind::FullText] {
        let of_kind: Vec<&UnitTiming> = timings.iter().filter(|t| t.kind == kind).collect();
        if of_kind.is_empty() {
            continue;
        }
        let mut medians: Vec<f64> = of_kind.iter().map(|t| t.median_ms).collect();
        let mean_ms = medians.iter().sum::<f64>() / medians.len() as f64;
        let median_ms = median(&mut medians);
        results.push(BenchResult {
            unit_kind: kind,
            mode: config.mode,
            min_ms: medians[0],
            max_ms: medians[medians.len() - 1],
            mean_ms: mean_ms.clamp(medians[0], medians[medians.len() - 1]),
            median_ms,
            n: of_kind.len(),
            repetitions: config.repetitions,
            digest_consistency: of_kind.iter().all(|t| t.consistent),
        });
    }
    Ok(results)
}

/// Aligned text table of bench results.
pub fn render_table(results: &[BenchResult]) -> String {
    let mut out = format!(
        "{:<9} {:<19} {:>6} {:>12} {:>12} {:>12} {:>12} {:>10}\n",
        "kind", "mode", "n", "min_ms", "max_ms", "mean_ms", "median_ms", "consistent"
    );
    for r in results {
        let mode = match r.mode {
            BenchMode::InMemory => "in_memory",
            BenchMode::StreamingFromFile => "streaming_from_file",
        };
        out.push_str(&format!(
            "{:<9} {:<19} {:>6} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>10}\n",
            r.unit_kind.to_string(),
            mode,
            r.n,
            r.min_ms,
            r.max_ms,
            r.mean_ms,
            r.median_ms,
            r.digest_consistency
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadResult {
    pub bytes: usize,
    /// Read the file and hash the whole buffer.
    pub whole_ms: f64,
    /// Hash the file one octet per read call.
    pub streaming_ms: f64,
    pub ratio: f64,
    pub digest_consistency: bool,
}

/// Compares whole-buffer hashing with 1-octet streaming over `content`
/// stored in a temporary file. Each side is the median of `repetitions`.
pub fn chunk_overhead(content: &[u8], repetitions: usize) -> Result<OverheadResult, BenchError> {
    if repetitions == 0 {
        return Err(BenchError::ZeroRepetitions);
    }
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("input.bin");
    fs::write(&path, content)?;

    let mut whole = Vec::new();
    let mut streaming = Vec::new();
    let mut digests = Vec::new();
    for _ in 0..repetitions {
        let start = Instant::now();
        let d = compute_digest(&fs::read(&path)?);
        whole.push(millis(start));
        digests.push(d);

        let start = Instant::now();
        let d = compute_digest_streaming(File::open(&path)?, 1)?;
        streaming.push(millis(start));
        digests.push(d);
    }
    let whole_ms = median(&mut whole);
    let streaming_ms = median(&mut streaming);
    let expected = compute_digest(content);
    Ok(OverheadResult {
        bytes: content.len(),
        whole_ms,
        streaming_ms,
        ratio: streaming_ms / whole_ms.max(f64::MIN_POSITIVE),
        digest_consistency: digests.iter().all(|d| *d == expected),
    })
}
