//! Validators recompute the digest of a resource and compare it with the
//! digest in its URI. Each validator keeps a seen-ledger recording when a
//! digest was first observed valid.

pub mod http;
pub mod quorum;

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::{compute_digest, Digest};
use crate::fetch::{Fetch, FetchError, HttpFetcher};
use crate::resource::rfc3339;
use crate::uri::TrustyUri;

pub use quorum::{default_threshold, quorum_validate, QuorumError, QuorumOutcome, ValidatorClient, Vote};

const LEDGER_FILE: &str = "seen.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub uri: TrustyUri,
    pub expected: Digest,
    pub actual: Digest,
    #[serde(rename = "match")]
    pub matches: bool,
    #[serde(default, with = "rfc3339::option")]
    pub first_seen: Option<DateTime<Utc>>,
    pub validator_id: String,
}

#[derive(Debug, Error)]
pub enum ValidatorError {
    #[error("could not fetch {0}")]
    FetchFailed(#[from] FetchError),
    #[error("seen-ledger: {0}")]
    Ledger(#[from] io::Error),
}

#[derive(Serialize, Deserialize)]
struct LedgerLine {
    digest: Digest,
    #[serde(with = "rfc3339")]
    first_seen: DateTime<Utc>,
}

/// Append-only map digest -> first time it validated. Entries never change.
#[derive(Debug, Default)]
pub struct SeenLedger {
    seen: HashMap<Digest, DateTime<Utc>>,
    file: Option<PathBuf>,
}

impl SeenLedger {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(LEDGER_FILE);
        let mut seen = HashMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: LedgerLine = serde_json::from_str(&line).map_err(io::Error::other)?;
                seen.entry(entry.digest).or_insert(entry.first_seen);
            }
        }
        Ok(Self {
            seen,
            file: Some(path),
        })
    }

    pub fn first_seen(&self, digest: &Digest) -> Option<DateTime<Utc>> {
        self.seen.get(digest).copied()
    }

    /// Records `digest` as seen at `at` unless it already has an entry.
    /// Returns the stored time.
    pub fn observe(&mut self, digest: Digest, at: DateTime<Utc>) -> io::Result<DateTime<Utc>> {
        if let Some(first) = self.seen.get(&digest) {
            return Ok(*first);
        }
        if let Some(path) = &self.file {
            let mut line = serde_json::to_vec(&LedgerLine {
                digest,
                first_seen: at,
            })
            .map_err(io::Error::other)?;
            line.push(b'\n');
            let mut file = OpenOptions::new().create(true).append(true).open(path)?;
            file.write_all(&line)?;
            file.sync_data()?;
        }
        self.seen.insert(digest, at);
        Ok(at)
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }
}

type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub struct Validator<F = HttpFetcher> {
    id: String,
    ledger: Mutex<SeenLedger>,
    fetcher: F,
    clock: Clock,
}

impl<F: Fetch> Validator<F> {
    pub fn new(id: impl Into<String>, ledger: SeenLedger, fetcher: F) -> Self {
        Self {
            id: id.into(),
            ledger: Mutex::new(ledger),
            fetcher,
            clock: Arc::new(Utc::now),
        }
    }

    pub fn with_clock(mut self, clock: impl Fn() -> DateTime<Utc> + Send + Sync + 'static) -> Self {
        self.clock = Arc::new(clock);
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn first_seen(&self, digest: &Digest) -> Option<DateTime<Utc>> {
        self.ledger.lock().unwrap_or_else(|e| e.into_inner()).first_seen(digest)
    }

    /// Checks `content` against `uri`.
    pub fn validate(&self, uri: &TrustyUri, content: &[u8]) -> Result<ValidationReport, ValidatorError> {
        let expected = *uri.digest();
        let actual = compute_digest(content);
        let matches = expected == actual;
        let first_seen = {
            let mut ledger = self.ledger.lock().unwrap_or_else(|e| e.into_inner());
            if matches {
                Some(ledger.observe(expected, (self.clock)())?)
            } else {
                ledger.first_seen(&expected)
            }
        };
        Ok(ValidationReport {
            uri: uri.clone(),
            expected,
            actual,
            matches,
            first_seen,
            validator_id: self.id.clone(),
        })
    }

    /// Fetches `uri` itself and checks what came back.
    pub async fn validate_directive(&self, uri: &TrustyUri) -> Result<ValidationReport, ValidatorError> {
        let resource = self.fetcher.fetch(uri).await?;
        self.validate(uri, resource.content())
    }
}
