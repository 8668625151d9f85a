//! The publisher: an append-only, digest-addressed store with publish-once
//! semantics.
//!
//! Layout under the storage root:
//!
//! ```text
//! objects/ab/cdef....bin    content, named by its hex digest (2-char fan-out)
//! objects/ab/cdef....json   sidecar PublicationRecord
//! authors.log               append-only `author<TAB>digest` lines
//! ```
//!
//! A digest maps to exactly one byte sequence for the lifetime of the store.
//! Republishing identical bytes returns the existing record; different bytes
//! always get a new URI.

pub mod client;
pub mod http;

use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::{compute_digest, Digest};
use crate::resource::{build_chain_entry, Parent, PublicationMeta, Resource};
use crate::uri::{mint_with_digest, TrustyUri, UriError};

/// Accepted distance between an author-supplied publication time and the
/// publisher's clock.
pub const CLOCK_TOLERANCE: Duration = Duration::minutes(5);

const OBJECTS_DIR: &str = "objects";
const AUTHORS_LOG: &str = "authors.log";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no publication with digest {0}")]
    NotFound(Digest),
    #[error("stored bytes for {expected} hash to {actual}; refusing to serve")]
    IntegrityFailure { expected: Digest, actual: Digest },
    #[error("parent {0} is not published here and was not marked external")]
    ParentNotFound(TrustyUri),
    #[error("author `{0}` already has publications; the root parent is only for a first publication")]
    RootParentNotAllowed(String),
    #[error("claimed publication time {claimed} is more than 5 minutes from the publisher clock {now}")]
    ClockSkew {
        claimed: DateTime<Utc>,
        now: DateTime<Utc>,
    },
    #[error("different content already stored under digest {0}")]
    ProvableCollision(Digest),
    #[error("invalid base URI: {0}")]
    BaseUri(#[from] UriError),
    #[error("corrupt metadata at {path}: {reason}")]
    CorruptMetadata { path: PathBuf, reason: String },
    #[error("storage failure: {0}")]
    Storage(#[from] io::Error),
}

/// The publish-once ledger entry for one resource.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub digest: Digest,
    pub uri: TrustyUri,
    pub meta: PublicationMeta,
    pub media_type: String,
    pub size: u64,
}

/// How the parent of a new publication is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParentSpec {
    /// The publisher root for an author's first publication, otherwise the
    /// author's latest publication.
    Auto,
    Root,
    /// Must already be published in this store.
    Local(TrustyUri),
    /// Published elsewhere; not checked.
    External(TrustyUri),
}

#[derive(Debug, Clone)]
pub struct PublishRequest {
    pub resource: Resource,
    pub author: String,
    pub parent: ParentSpec,
    /// Publication time claimed by the author, checked against the publisher
    /// clock. The publisher clock is what gets recorded.
    pub claimed_at: Option<DateTime<Utc>>,
}

impl PublishRequest {
    pub fn new(resource: Resource, author: &str, parent: ParentSpec) -> Self {
        Self {
            resource,
            author: author.to_string(),
            parent,
            claimed_at: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishOutcome {
    pub record: PublicationRecord,
    /// False when identical content was already published.
    pub created: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "uri", rename_all = "snake_case")]
pub enum ChainTerminus {
    Root(String),
    External(TrustyUri),
}

/// A record's ancestry, newest first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub records: Vec<PublicationRecord>,
    pub terminus: ChainTerminus,
}

#[derive(Debug, Default)]
struct StoreIndex {
    by_digest: HashMap<Digest, PublicationRecord>,
    by_author: HashMap<String, Vec<Digest>>,
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    base: String,
    index: RwLock<StoreIndex>,
    writer: Mutex<()>,
}

impl Store {
    /// Opens (or creates) a store rooted at `root` that mints URIs under
    /// `base`.
    pub fn open(root: impl Into<PathBuf>, base: &str) -> Result<Self, StoreError> {
        let root = root.into();
        // Validates the base once; every later mint uses the same string.
        mint_with_digest(base, compute_digest(b""))?;
        fs::create_dir_all(root.join(OBJECTS_DIR))?;
        let store = Self {
            root,
            base: base.to_string(),
            index: RwLock::new(StoreIndex::default()),
            writer: Mutex::new(()),
        };
        store.load_index()?;
        Ok(store)
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.read_index().by_digest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, digest: &Digest) -> bool {
        self.read_index().by_digest.contains_key(digest)
    }

    pub fn record(&self, digest: &Digest) -> Option<PublicationRecord> {
        self.read_index().by_digest.get(digest).cloned()
    }

    /// Digests published by `author`, oldest first.
    pub fn by_author(&self, author: &str) -> Vec<Digest> {
        self.read_index()
            .by_author
            .get(author)
            .cloned()
            .unwrap_or_default()
    }

    /// All records, oldest first.
    pub fn records(&self) -> Vec<PublicationRecord> {
        let mut records: Vec<_> = self.read_index().by_digest.values().cloned().collect();
        records.sort_by(|a, b| {
            a.meta
                .published_at
                .cmp(&b.meta.published_at)
                .then_with(|| a.digest.cmp(&b.digest))
        });
        records
    }

    /// Path of the stored content for `digest`.
    pub fn object_path(&self, digest: &Digest) -> PathBuf {
        self.object_stem(digest).with_extension("bin")
    }

    fn metadata_path(&self, digest: &Digest) -> PathBuf {
        self.object_stem(digest).with_extension("json")
    }

    fn object_stem(&self, digest: &Digest) -> PathBuf {
        let hex = digest.to_hex();
        self.root.join(OBJECTS_DIR).join(&hex[..2]).join(&hex[2..])
    }

    pub fn publish(&self, request: PublishRequest) -> Result<PublishOutcome, StoreError> {
        self.publish_at(request, Utc::now())
    }

    /// Publishes with `now` as the publisher clock.
    pub fn publish_at(
        &self,
        request: PublishRequest,
        now: DateTime<Utc>,
    ) -> Result<PublishOutcome, StoreError> {
        let digest = compute_digest(request.resource.content());
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());

        if let Some(existing) = self.record(&digest) {
            let stored = fs::read(self.object_path(&digest))?;
            if stored != request.resource.content() {
                return Err(StoreError::ProvableCollision(digest));
            }
            return Ok(PublishOutcome {
                record: existing,
                created: false,
            });
        }

        if let Some(claimed) = request.claimed_at {
            if (claimed - now).abs() > CLOCK_TOLERANCE {
                return Err(StoreError::ClockSkew { claimed, now });
            }
        }
        let parent = self.resolve_parent(&request.author, &request.parent)?;
        let record = PublicationRecord {
            digest,
            uri: mint_with_digest(&self.base, digest)?,
            meta: build_chain_entry(parent, &request.author, now),
            media_type: request.resource.media_type().to_string(),
            size: request.resource.size(),
        };

        let stem = self.object_stem(&digest);
        if let Some(dir) = stem.parent() {
            fs::create_dir_all(dir)?;
        }
        write_atomically(&self.object_path(&digest), request.resource.content())?;
        let sidecar = serde_json::to_vec_pretty(&record).map_err(io::Error::other)?;
        write_atomically(&self.metadata_path(&digest), &sidecar)?;
        self.append_author(&request.author, &digest)?;

        let mut index = self.write_index();
        index.by_digest.insert(digest, record.clone());
        index
            .by_author
            .entry(request.author)
            .or_default()
            .push(digest);
        Ok(PublishOutcome {
            record,
            created: true,
        })
    }

    fn resolve_parent(&self, author: &str, spec: &ParentSpec) -> Result<Parent, StoreError> {
        let latest = self.by_author(author).last().copied();
        match spec {
            ParentSpec::Auto => Ok(match latest.and_then(|d| self.record(&d)) {
                Some(previous) => Parent::Resource(previous.uri),
                None => Parent::Root(self.base.clone()),
            }),
            ParentSpec::Root if latest.is_some() => {
                Err(StoreError::RootParentNotAllowed(author.to_string()))
            }
            ParentSpec::Root => Ok(Parent::Root(self.base.clone())),
            ParentSpec::Local(uri) => match self.record(uri.digest()) {
                Some(parent) => Ok(Parent::Resource(parent.uri)),
                None => Err(StoreError::ParentNotFound(uri.clone())),
            },
            ParentSpec::External(uri) => Ok(Parent::Resource(uri.clone())),
        }
    }

    /// Returns the stored resource after re-checking its digest.
    pub fn fetch(&self, digest: &Digest) -> Result<(Resource, PublicationRecord), StoreError> {
        let record = self.record(digest).ok_or(StoreError::NotFound(*digest))?;
        let bytes = fs::read(self.object_path(digest))?;
        let actual = compute_digest(&bytes);
        if actual != *digest {
            return Err(StoreError::IntegrityFailure {
                expected: *digest,
                actual,
            });
        }
        let resource = Resource::new(bytes, &record.media_type).map_err(|e| {
            StoreError::CorruptMetadata {
                path: self.metadata_path(digest),
                reason: e.to_string(),
            }
        })?;
        Ok((resource, record))
    }

    /// The parent chain of `digest` up to the publisher root or to the first
    /// parent published elsewhere.
    pub fn chain_of(&self, digest: &Digest) -> Result<Chain, StoreError> {
        let mut current = self.record(digest).ok_or(StoreError::NotFound(*digest))?;
        let mut seen = HashSet::new();
        let mut records = Vec::new();
        loop {
            seen.insert(current.digest);
            let parent = current.meta.parent.clone();
            records.push(current);
            match parent {
                Parent::Root(base) => {
                    return Ok(Chain {
                        records,
                        terminus: ChainTerminus::Root(base),
                    })
                }
                Parent::Resource(uri) => match self.record(uri.digest()) {
                    Some(next) if !seen.contains(&next.digest) => current = next,
                    _ => {
                        return Ok(Chain {
                            records,
                            terminus: ChainTerminus::External(uri),
                        })
                    }
                },
            }
        }
    }

    fn read_index(&self) -> std::sync::RwLockReadGuard<'_, StoreIndex> {
        self.index.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write_index(&self) -> std::sync::RwLockWriteGuard<'_, StoreIndex> {
        self.index.write().unwrap_or_else(|e| e.into_inner())
    }

    fn append_author(&self, author: &str, digest: &Digest) -> io::Result<()> {
        let mut log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.root.join(AUTHORS_LOG))?;
        writeln!(log, "{}\t{}", author.replace(['\t', '\n'], " "), digest)?;
        log.sync_data()
    }

    fn load_index(&self) -> Result<(), StoreError> {
        let mut index = StoreIndex::default();
        for fan_out in read_dir_sorted(&self.root.join(OBJECTS_DIR))? {
            for path in read_dir_sorted(&fan_out)? {
                if path.extension().map_or(true, |ext| ext != "json") {
                    continue;
                }
                let corrupt = |reason: String| StoreError::CorruptMetadata {
                    path: path.clone(),
                    reason,
                };
                let bytes = fs::read(&path)?;
                let record: PublicationRecord =
                    serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
                if self.metadata_path(&record.digest) != path {
                    return Err(corrupt("digest does not match file name".into()));
                }
                index.by_digest.insert(record.digest, record);
            }
        }

        let log_path = self.root.join(AUTHORS_LOG);
        let mut logged = HashSet::new();
        if log_path.exists() {
            for line in fs::read_to_string(&log_path)?.lines() {
                let Some((author, hex)) = line.rsplit_once('\t') else {
                    continue;
                };
                let Ok(digest) = Digest::parse_hex(hex) else {
                    continue;
                };
                if index.by_digest.contains_key(&digest) && logged.insert(digest) {
                    index
                        .by_author
                        .entry(author.to_string())
                        .or_default()
                        .push(digest);
                }
            }
        }
        // Records whose log append was lost (crash between writes).
        let mut missing: Vec<_> = index
            .by_digest
            .values()
            .filter(|r| !logged.contains(&r.digest))
            .cloned()
            .collect();
        missing.sort_by_key(|r| r.meta.published_at);
        for record in missing {
            self.append_author(&record.meta.author_id, &record.digest)?;
            index
                .by_author
                .entry(record.meta.author_id.clone())
                .or_default()
                .push(record.digest);
        }

        *self.write_index() = index;
        Ok(())
    }
}

fn read_dir_sorted(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .map(|entry| entry.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.sort();
    Ok(paths)
}

fn write_atomically(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(tmp, path)
}
