//! A search engine that only knows verified pages.
//!
//! The [`crawl`] module fetches pages by trusty URI, verifies each one
//! against its digest, and hands only matching pages to the [`SearchIndex`].
//! Queries therefore can only ever return trusty URIs whose content was seen
//! to match.

pub mod client;
pub mod crawl;
pub mod http;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::digest::Digest;
use crate::resource::{rfc3339, LinkSet};
use crate::uri::TrustyUri;

pub use crawl::{CrawlError, CrawlReport, Crawler};

const INDEX_FILE: &str = "index.json";

/// Unicode whitespace split plus lowercase folding. No stemming.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub uri: TrustyUri,
    pub host: String,
    /// Token -> occurrence count.
    pub terms: BTreeMap<String, u32>,
    #[serde(with = "rfc3339")]
    pub verified_at: DateTime<Utc>,
    pub outbound: LinkSet,
}

impl IndexEntry {
    pub fn new(uri: TrustyUri, text: &str, outbound: LinkSet, verified_at: DateTime<Utc>) -> Self {
        let mut terms = BTreeMap::new();
        for token in tokenize(text) {
            *terms.entry(token).or_insert(0) += 1;
        }
        Self {
            host: uri.authority(),
            uri,
            terms,
            verified_at,
            outbound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub uri: TrustyUri,
    pub score: u32,
    #[serde(with = "rfc3339")]
    pub verified_at: DateTime<Utc>,
}

/// Counters for `/status`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexStatus {
    pub entries: usize,
    pub distinct_terms: usize,
    pub crawls: u64,
    pub rejected_total: u64,
    pub failed_total: u64,
    pub pending: usize,
    #[serde(default, with = "rfc3339::option")]
    pub last_crawl: Option<DateTime<Utc>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Persisted {
    entries: Vec<IndexEntry>,
    status: IndexStatus,
}

/// Inverted index over verified pages. Entries are immutable once added.
#[derive(Debug, Default)]
pub struct SearchIndex {
    entries: Vec<IndexEntry>,
    by_uri: HashMap<TrustyUri, usize>,
    by_digest: HashMap<Digest, Vec<usize>>,
    postings: HashMap<String, BTreeSet<usize>>,
    status: IndexStatus,
    dir: Option<PathBuf>,
}

impl SearchIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads the index persisted in `dir`, or starts empty.
    pub fn open(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(INDEX_FILE);
        let persisted: Persisted = if path.exists() {
            serde_json::from_slice(&fs::read(&path)?).map_err(io::Error::other)?
        } else {
            Persisted::default()
        };
        let mut index = Self {
            status: persisted.status,
            dir: Some(dir.to_path_buf()),
            ..Self::default()
        };
        for entry in persisted.entries {
            index.insert(entry);
        }
        Ok(index)
    }

    pub fn save(&self) -> io::Result<()> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let persisted = Persisted {
            entries: self.entries.clone(),
            status: self.status(),
        };
        let tmp = dir.join(format!("{INDEX_FILE}.tmp"));
        fs::write(&tmp, serde_json::to_vec(&persisted).map_err(io::Error::other)?)?;
        fs::rename(tmp, dir.join(INDEX_FILE))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn get(&self, uri: &TrustyUri) -> Option<&IndexEntry> {
        self.by_uri.get(uri).map(|&i| &self.entries[i])
    }

    pub fn contains_digest(&self, digest: &Digest) -> bool {
        self.by_digest.contains_key(digest)
    }

    pub fn status(&self) -> IndexStatus {
        IndexStatus {
            entries: self.entries.len(),
            distinct_terms: self.postings.len(),
            ..self.status.clone()
        }
    }

    pub(crate) fn record_crawl(&mut self, report: &CrawlReport, at: DateTime<Utc>) {
        self.status.crawls += 1;
        self.status.rejected_total += report.rejected.len() as u64;
        self.status.failed_total += report.failed.len() as u64;
        self.status.pending = report.pending.len();
        self.status.last_crawl = Some(at);
    }

    /// Adds a verified entry. Returns false if the URI is already indexed;
    /// the existing entry is kept.
    pub(crate) fn insert(&mut self, entry: IndexEntry) -> bool {
        if self.by_uri.contains_key(&entry.uri) {
            return false;
        }
        let id = self.entries.len();
        for term in entry.terms.keys() {
            self.postings.entry(term.clone()).or_default().insert(id);
        }
        self.by_uri.insert(entry.uri.clone(), id);
        self.by_digest.entry(*entry.uri.digest()).or_default().push(id);
        self.entries.push(entry);
        true
    }

    /// Entries containing every query token, best first: total occurrences
    /// of the query tokens, then most recently verified, then URI.
    pub fn query<S: AsRef<str>>(&self, terms: &[S]) -> Vec<SearchHit> {
        let tokens: BTreeSet<String> = terms
            .iter()
            .flat_map(|t| tokenize(t.as_ref()))
            .collect();
        if tokens.is_empty() {
            return Vec::new();
        }
        let mut candidates: Option<BTreeSet<usize>> = None;
        for token in &tokens {
            let Some(posting) = self.postings.get(token) else {
                return Vec::new();
            };
            candidates = Some(match candidates {
                None => posting.clone(),
                Some(c) => c.intersection(posting).copied().collect(),
            });
        }
        let mut hits: Vec<SearchHit> = candidates
            .unwrap_or_default()
            .into_iter()
            .map(|id| {
                let entry = &self.entries[id];
                SearchHit {
                    uri: entry.uri.clone(),
                    score: tokens.iter().map(|t| entry.terms.get(t).copied().unwrap_or(0)).sum(),
                    verified_at: entry.verified_at,
                }
            })
            .collect();
        sort_hits(&mut hits);
        hits
    }

    /// Every indexed location of `digest`, most recently verified first.
    pub fn lookup(&self, digest: &Digest) -> Vec<SearchHit> {
        let mut hits: Vec<SearchHit> = self
            .by_digest
            .get(digest)
            .into_iter()
            .flatten()
            .map(|&id| SearchHit {
                uri: self.entries[id].uri.clone(),
                score: 0,
                verified_at: self.entries[id].verified_at,
            })
            .collect();
        sort_hits(&mut hits);
        hits
    }
}

fn sort_hits(hits: &mut [SearchHit]) {
    hits.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then_with(|| b.verified_at.cmp(&a.verified_at))
            .then_with(|| a.uri.cmp(&b.uri))
    });
}
