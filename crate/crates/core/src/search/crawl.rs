//! Breadth-first verifying crawler.
//!
//! Only trusty links of pages that verified are followed. Plain links are
//! recorded on the entry but never fetched. Each host gets its own fetch
//! budget and at most one request in flight; different hosts are fetched
//! concurrently.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Utc};
use futures::future::join_all;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{IndexEntry, SearchIndex};
use crate::digest::Digest;
use crate::fetch::Fetch;
use crate::resource::{extract_links, LinkSet, Resource};
use crate::uri::{TrustyUri, VerificationOutcome};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CrawlError {
    #[error("no seeds given")]
    NoSeeds,
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("none of the {0} seeds could be fetched")]
    CrawlEmpty(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub uri: TrustyUri,
    pub expected: Digest,
    pub actual: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchFailure {
    pub uri: TrustyUri,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlReport {
    /// Newly indexed pages.
    pub indexed: usize,
    /// Pages whose bytes did not match their URI. Never indexed, links not
    /// followed.
    pub rejected: Vec<Rejection>,
    /// Network or HTTP failures; skipped.
    pub failed: Vec<FetchFailure>,
    /// Discovered but not fetched because the host budget ran out.
    pub pending: Vec<TrustyUri>,
    /// Linked digests that were already in the index before this crawl.
    pub already_indexed: usize,
}

/// Pending work plus what has been seen. A digest is fetched at most once.
#[derive(Debug, Default)]
pub struct CrawlFrontier {
    pending: VecDeque<TrustyUri>,
    visited: HashSet<Digest>,
    per_host_budget: HashMap<String, usize>,
    budget: usize,
}

impl CrawlFrontier {
    fn new(budget: usize) -> Self {
        Self {
            budget,
            ..Self::default()
        }
    }

    /// Queues `uri` unless its digest was seen before.
    fn offer(&mut self, uri: TrustyUri) -> bool {
        if self.visited.insert(*uri.digest()) {
            self.pending.push_back(uri);
            true
        } else {
            false
        }
    }

    /// Takes one unit of `host`'s budget.
    fn take_budget(&mut self, host: &str) -> bool {
        let remaining = self
            .per_host_budget
            .entry(host.to_string())
            .or_insert(self.budget);
        if *remaining == 0 {
            false
        } else {
            *remaining -= 1;
            true
        }
    }
}

type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub struct Crawler<F> {
    fetcher: F,
    clock: Clock,
}

impl<F: Fetch> Crawler<F> {
    pub fn new(fetcher: F) -> Self {
        Self {
            fetcher,
            clock: Arc::new(Utc::now),
        }
    }

    pub fn with_clock(mut self, clock: impl Fn() -> DateTime<Utc> + Send + Sync + 'static) -> Self {
        self.clock = Arc::new(clock);
        self
    }

    /// Crawls from `seeds`, giving every host `budget` fetches.
    pub async fn crawl(
        &self,
        index: &RwLock<SearchIndex>,
        seeds: &[TrustyUri],
        budget: usize,
    ) -> Result<CrawlReport, CrawlError> {
        if seeds.is_empty() {
            return Err(CrawlError::NoSeeds);
        }
        if budget == 0 {
            return Err(CrawlError::ZeroBudget);
        }
        let mut report = CrawlReport::default();
        let mut frontier = CrawlFrontier::new(budget);
        {
            let index = index.read().unwrap_or_else(|e| e.into_inner());
            for seed in seeds {
                if index.contains_digest(seed.digest()) {
                    frontier.visited.insert(*seed.digest());
                    report.already_indexed += 1;
                } else {
                    frontier.offer(seed.clone());
                }
            }
        }
        let seed_digests: HashSet<Digest> = seeds.iter().map(|s| *s.digest()).collect();
        let mut seeds_fetched = report.already_indexed;

        while !frontier.pending.is_empty() {
            let mut wave = Vec::new();
            while let Some(uri) = frontier.pending.pop_front() {
                if frontier.take_budget(&uri.authority()) {
                    wave.push(uri);
                } else {
                    report.pending.push(uri);
                }
            }
            if wave.is_empty() {
                break;
            }

            for (uri, result) in self.fetch_wave(&wave).await {
                let resource = match result {
                    Ok(resource) => resource,
                    Err(reason) => {
                        tracing::warn!(%uri, %reason, "crawl fetch failed");
                        report.failed.push(FetchFailure { uri, reason });
                        continue;
                    }
                };
                if seed_digests.contains(uri.digest()) {
                    seeds_fetched += 1;
                }
                match uri.verify(resource.content()) {
                    VerificationOutcome::Mismatch { expected, actual } => {
                        tracing::warn!(%uri, %actual, "content does not match its URI; rejected");
                        report.rejected.push(Rejection {
                            uri,
                            expected,
                            actual,
                        });
                    }
                    VerificationOutcome::Match => {
                        let entry = self.entry_for(uri, &resource);
                        let mut index = index.write().unwrap_or_else(|e| e.into_inner());
                        for link in &entry.outbound.trusty_links {
                            if index.contains_digest(link.digest()) {
                                if frontier.visited.insert(*link.digest()) {
                                    report.already_indexed += 1;
                                }
                            } else {
                                frontier.offer(link.clone());
                            }
                        }
                        if index.insert(entry) {
                            report.indexed += 1;
                        }
                    }
                }
            }
        }

        if seeds_fetched == 0 {
            return Err(CrawlError::CrawlEmpty(seeds.len()));
        }
        index
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .record_crawl(&report, (self.clock)());
        Ok(report)
    }

    fn entry_for(&self, uri: TrustyUri, resource: &Resource) -> IndexEntry {
        let outbound = extract_links(resource, &uri.to_string()).unwrap_or_else(|e| {
            tracing::warn!(%uri, error = %e, "could not extract links");
            LinkSet::default()
        });
        let text = resource.visible_text().unwrap_or_default();
        IndexEntry::new(uri, &text, outbound, (self.clock)())
    }

    /// Fetches a wave: hosts in parallel, one request at a time per host.
    /// Results come back in wave order.
    async fn fetch_wave(&self, wave: &[TrustyUri]) -> Vec<(TrustyUri, Result<Resource, String>)> {
        let mut by_host: Vec<(String, Vec<usize>)> = Vec::new();
        for (i, uri) in wave.iter().enumerate() {
            let host = uri.authority();
            match by_host.iter_mut().find(|(h, _)| *h == host) {
                Some((_, ids)) => ids.push(i),
                None => by_host.push((host, vec![i])),
            }
        }
        let per_host = by_host.into_iter().map(|(_, ids)| async move {
            let mut out = Vec::with_capacity(ids.len());
            for i in ids {
                let result = self.fetcher.fetch(&wave[i]).await.map_err(|e| e.to_string());
                out.push((i, result));
            }
            out
        });
        let mut results: Vec<(usize, Result<Resource, String>)> =
            join_all(per_host).await.into_iter().flatten().collect();
        results.sort_by_key(|(i, _)| *i);
        results
            .into_iter()
            .map(|(i, r)| (wave[i].clone(), r))
            .collect()
    }
}
