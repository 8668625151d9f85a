//! In-process fixture network for protocol tests.
//!
//! - H1: a publisher store (trusted host).
//! - H2: a mirror of H1 that flips the first octet of every body while its
//!   tamper switch is on (untrusted host).
//! - S1: a verifying index crawled from H1 and H2 (trusted source).
//! - S2: a naive index whose entries were never verified (untrusted source).
//! - Validators, some of which may see H1 through an always-tampering mirror.
//!
//! Resources: A@H1 links to B@H1; C@H2; D@H1 and E@H2 as listed by S2; S1
//! also knows E@H1.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use chrono::{TimeZone, Utc};
use thiserror::Error;
use tokio::net::TcpListener;

use crate::digest::Digest;
use crate::fetch::HttpFetcher;
use crate::resolver::{Query, ResolutionTrace, ResolveError, Resolver, ResolverOptions};
use crate::resource::{LinkSet, Resource};
use crate::search::crawl::Crawler;
use crate::search::{http as search_http, IndexEntry, SearchIndex};
use crate::service::{spawn_on, ServiceHandle};
use crate::store::{http as store_http, ParentSpec, PublishRequest, Store};
use crate::trust::TrustContext;
use crate::uri::TrustyUri;
use crate::validator::{http as validator_http, SeenLedger, Validator};

pub const AUTHOR: &str = "fixture-author";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("fixture misconfigured: {0}")]
    FixtureMisconfigured(String),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
}

fn misconfigured(e: impl ToString) -> HarnessError {
    HarnessError::FixtureMisconfigured(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scenario {
    A,
    B,
    C,
    D,
    E,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [Scenario::A, Scenario::B, Scenario::C, Scenario::D, Scenario::E];

    pub fn name(self) -> char {
        match self {
            Scenario::A => 'A',
            Scenario::B => 'B',
            Scenario::C => 'C',
            Scenario::D => 'D',
            Scenario::E => 'E',
        }
    }

    /// Search term that finds this scenario's resource.
    pub fn term(self) -> &'static str {
        match self {
            Scenario::A => "alpha",
            Scenario::B => "bravo",
            Scenario::C => "charlie",
            Scenario::D => "delta",
            Scenario::E => "echo",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| s.eq_ignore_ascii_case(&sc.name().to_string()))
            .ok_or_else(|| misconfigured(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FixtureOptions {
    /// Number of validators.
    pub validators: usize,
    /// How many of them see H1 only through a tampering mirror.
    pub corrupted_validators: usize,
}

#[derive(Clone)]
struct MirrorState {
    store: Arc<Store>,
    tamper: Arc<AtomicBool>,
}

/// Serves H1's objects under the same paths, optionally tampered.
fn mirror_router(store: Arc<Store>, tamper: Arc<AtomicBool>) -> Router {
    Router::new()
        .route("/{digest}", get(mirror_get))
        .with_state(MirrorState { store, tamper })
}

async fn mirror_get(State(state): State<MirrorState>, Path(digest): Path<String>) -> Response {
    let Ok(digest) = Digest::parse_hex(&digest) else {
        return StatusCode::NOT_FOUND.into_response();
    };
    match state.store.fetch(&digest) {
        Ok((resource, _)) => {
            let media_type = resource.media_type().to_string();
            let mut body = resource.into_content();
            if state.tamper.load(Ordering::SeqCst) {
                if let Some(first) = body.first_mut() {
                    *first ^= 0x01;
                }
            }
            ([(header::CONTENT_TYPE, media_type)], body).into_response()
        }
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

pub struct FixtureNetwork {
    pub store: Arc<Store>,
    pub h1: ServiceHandle,
    pub h2: ServiceHandle,
    /// Always tampering view of H1, used for partitioned validators.
    pub corrupt: ServiceHandle,
    pub s1: ServiceHandle,
    pub s1_index: Arc<RwLock<SearchIndex>>,
    pub s2: ServiceHandle,
    pub validators: Vec<ServiceHandle>,
    /// Canonical locations: A, B, D on H1; C, E on H2.
    pub resources: BTreeMap<char, TrustyUri>,
    pub ctx: TrustContext,
    tamper: Arc<AtomicBool>,
    _dir: tempfile::TempDir,
}

async fn listener() -> Result<TcpListener, HarnessError> {
    TcpListener::bind("127.0.0.1:0").await.map_err(misconfigured)
}

fn page(title: &str, body: &str, links: &[&TrustyUri]) -> String {
    let anchors: String = links
        .iter()
        .map(|l| format!(r#"<li><a href="{l}">next</a></li>"#))
        .collect();
    format!(
        "<!DOCTYPE html>\n<html><head><title>{title}</title></head>\
         <body><h1>{title}</h1><p>{body}</p><ul>{anchors}</ul></body></html>\n"
    )
}

impl FixtureNetwork {
    pub async fn start(options: FixtureOptions) -> Result<Self, HarnessError> {
        if options.corrupted_validators > options.validators {
            return Err(misconfigured("more corrupted validators than validators"));
        }
        let dir = tempfile::tempdir().map_err(misconfigured)?;

        let h1_listener = listener().await?;
        let h1_addr = h1_listener.local_addr().map_err(misconfigured)?;
        let store = Arc::new(Store::open(dir.path().join("h1"), &format!("http://{h1_addr}/")).map_err(misconfigured)?);

        let publish = |content: String| -> Result<TrustyUri, HarnessError> {
            let request = PublishRequest::new(Resource::html(content), AUTHOR, ParentSpec::Auto);
            Ok(store.publish(request).map_err(misconfigured)?.record.uri)
        };
        let b = publish(page("bravo", "Linked resource.", &[]))?;
        let a = publish(page("alpha", "Article on a trusted host.", &[&b]))?;
        let c = publish(page("charlie", "Resource mirrored to another host.", &[]))?;
        let d = publish(page("delta", "Resource listed by an unverified index.", &[]))?;
        let e = publish(page("echo", "Resource listed everywhere.", &[]))?;

        let h1 = spawn_on(h1_listener, store_http::router(store.clone())).map_err(misconfigured)?;
        let tamper = Arc::new(AtomicBool::new(false));
        let h2 = spawn_on(listener().await?, mirror_router(store.clone(), tamper.clone())).map_err(misconfigured)?;
        let corrupt = spawn_on(
            listener().await?,
            mirror_router(store.clone(), Arc::new(AtomicBool::new(true))),
        )
        .map_err(misconfigured)?;

        let on_h2 = |u: &TrustyUri| u.with_authority(&h2.authority()).map_err(misconfigured);
        let (c2, e2) = (on_h2(&c)?, on_h2(&e)?);

        let s1_index = Arc::new(RwLock::new(SearchIndex::new()));
        let fixed = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        Crawler::new(HttpFetcher::default())
            .with_clock(move || fixed)
            .crawl(&s1_index, &[a.clone(), c2.clone(), e.clone()], 10)
            .await
            .map_err(misconfigured)?;
        if s1_index.read().unwrap_or_else(|e| e.into_inner()).len() != 4 {
            return Err(misconfigured("S1 crawl did not index A, B, C and E"));
        }
        let s1 = spawn_on(listener().await?, search_http::router(s1_index.clone())).map_err(misconfigured)?;

        let mut naive = SearchIndex::new();
        naive.insert(IndexEntry::new(d.clone(), "delta", LinkSet::default(), fixed));
        naive.insert(IndexEntry::new(e2.clone(), "echo", LinkSet::default(), fixed));
        let s2 = spawn_on(listener().await?, search_http::router(Arc::new(RwLock::new(naive)))).map_err(misconfigured)?;

        let mut validators = Vec::new();
        for i in 0..options.validators {
            let l = listener().await?;
            let id = l.local_addr().map_err(misconfigured)?.to_string();
            let mut fetcher = HttpFetcher::default();
            if i < options.corrupted_validators {
                fetcher = fetcher.route(&h1.authority(), &corrupt.authority());
            }
            let validator = Arc::new(Validator::new(id, SeenLedger::in_memory(), fetcher));
            validators.push(spawn_on(l, validator_http::router(validator)).map_err(misconfigured)?);
        }

        let ctx = TrustContext::new([s1.authority()], [h1.authority()])
            .with_validators(validators.iter().map(ServiceHandle::authority));
        let resources = BTreeMap::from([('A', a), ('B', b), ('C', c2), ('D', d), ('E', e2)]);
        Ok(Self {
            store,
            h1,
            h2,
            corrupt,
            s1,
            s1_index,
            s2,
            validators,
            resources,
            ctx,
            tamper,
            _dir: dir,
        })
    }

    pub fn set_tamper(&self, on: bool) {
        self.tamper.store(on, Ordering::SeqCst);
    }

    pub fn resource(&self, name: char) -> &TrustyUri {
        &self.resources[&name]
    }

    /// Authority -> fixture label, for normalizing traces.
    pub fn labels(&self) -> Vec<(String, String)> {
        let mut labels = vec![
            (self.h1.authority(), "H1".to_string()),
            (self.h2.authority(), "H2".to_string()),
            (self.corrupt.authority(), "HX".to_string()),
            (self.s1.authority(), "S1".to_string()),
            (self.s2.authority(), "S2".to_string()),
        ];
        for (i, v) in self.validators.iter().enumerate() {
            labels.push((v.authority(), format!("V{}", i + 1)));
        }
        labels
    }

    /// Replaces authorities and resource digests with fixture names.
    pub fn normalize(&self, text: &str) -> String {
        let mut out = text.to_string();
        for (authority, label) in self.labels() {
            out = out.replace(&authority, &label);
        }
        for (name, uri) in &self.resources {
            out = out.replace(&uri.digest().to_hex(), &name.to_string());
        }
        out
    }

    /// Golden form of a trace: normalized steps, then the final decision,
    /// the normalized source of the content, and which resource the content
    /// hashes to.
    pub fn golden(&self, trace: &ResolutionTrace) -> String {
        let mut out = String::new();
        for step in &trace.steps {
            out.push_str(&serde_json::to_string(step).expect("steps serialize"));
            out.push('\n');
        }
        let content = trace
            .content
            .as_ref()
            .map(|c| crate::digest::compute_digest(c.content()).to_hex());
        let last = serde_json::json!({
            "final": trace.final_decision,
            "uri": trace.uri.as_ref().map(ToString::to_string),
            "content_digest": content,
        });
        out.push_str(&last.to_string());
        out.push('\n');
        self.normalize(&out)
    }

    /// The query a scenario starts from.
    pub fn scenario_query(&self, scenario: Scenario) -> Query {
        let source = match scenario {
            Scenario::A | Scenario::B | Scenario::C => self.s1.authority(),
            Scenario::D | Scenario::E => self.s2.authority(),
        };
        Query::Terms {
            terms: vec![scenario.term().to_string()],
            source,
        }
    }
}

pub async fn run_scenario(scenario: Scenario, net: &FixtureNetwork) -> Result<ResolutionTrace, HarnessError> {
    run_scenario_with(scenario, net, ResolverOptions::default()).await
}

pub async fn run_scenario_with(
    scenario: Scenario,
    net: &FixtureNetwork,
    options: ResolverOptions,
) -> Result<ResolutionTrace, HarnessError> {
    let resolver = Resolver::http(options);
    Ok(resolver.resolve(&net.scenario_query(scenario), &net.ctx).await?)
}
