//! Inputs shared by the benchmarks.

use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::{RngCore, SeedableRng};
use trusty_core::corpus::{self, Corpus, CorpusError};

/// The Tanzil Uthmani text shipped in `data/`.
pub fn corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/quran-uthmani.txt")
}

pub fn canonical_corpus() -> Result<Corpus, CorpusError> {
    corpus::ingest(&corpus_path())
}

/// Deterministic pseudo-random bytes.
pub fn payload(len: usize, seed: u64) -> Vec<u8> {
    let mut buf = vec![0u8; len];
    StdRng::seed_from_u64(seed).fill_bytes(&mut buf);
    buf
}
