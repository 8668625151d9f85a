//! Client-side resolution: fetch a resource, decide how far to trust it, and
//! carry out whatever follow-up the decision requires. Every message sent or
//! received is recorded in a [`ResolutionTrace`].

pub mod trace;

use std::collections::HashSet;

use thiserror::Error;

use crate::digest::Digest;
use crate::fetch::{Fetch, FetchError, HttpFetcher};
use crate::resource::{extract_links, Resource, ResourceError};
use crate::search::client::SearchClient;
use crate::search::SearchHit;
use crate::trust::{
    assess_link, assess_with, propagate, Rationale, RequiredAction, TrustContext, TrustDecision,
    TrustError, UnverifiedHostAction,
};
use crate::uri::{TrustyUri, VerificationOutcome};
use crate::validator::{quorum_validate, QuorumError};

pub use trace::{Action, ResolutionTrace, TraceFormatError, TraceStep, LOCAL_PEER};

/// A search service addressed by its authority.
pub trait Search: Send + Sync {
    fn search(
        &self,
        source: &str,
        terms: &[String],
    ) -> impl std::future::Future<Output = Result<Vec<SearchHit>, String>> + Send;

    fn lookup(
        &self,
        source: &str,
        digest: &Digest,
    ) -> impl std::future::Future<Output = Result<Vec<SearchHit>, String>> + Send;
}

/// Reaches search services over HTTP at `http://<authority>/`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HttpSearch;

impl Search for HttpSearch {
    async fn search(&self, source: &str, terms: &[String]) -> Result<Vec<SearchHit>, String> {
        let client = SearchClient::new(source).map_err(|e| e.to_string())?;
        client.search(terms).await.map_err(|e| e.to_string())
    }

    async fn lookup(&self, source: &str, digest: &Digest) -> Result<Vec<SearchHit>, String> {
        let client = SearchClient::new(source).map_err(|e| e.to_string())?;
        client.lookup(digest).await.map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    /// Ask `source` for `terms` and resolve the best hit.
    Terms { terms: Vec<String>, source: String },
    /// Resolve a URI directly. `via` names the source it came from, if any.
    Uri { uri: TrustyUri, via: Option<String> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ResolverOptions {
    /// Skip the initial fetch from an untrusted host.
    pub paranoid: bool,
    pub unverified_host: UnverifiedHostAction,
    /// Quorum threshold; simple majority when unset.
    pub quorum_threshold: Option<usize>,
}

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error("search source {source_id} unavailable: {reason}")]
    SourceUnavailable { source_id: String, reason: String },
    #[error("`{subject}` could not be retrieved from anywhere")]
    NotFoundAnywhere {
        subject: String,
        trace: Box<ResolutionTrace>,
    },
    #[error("link {index} out of range; the page has {count} trusty links")]
    LinkIndexOutOfRange { index: usize, count: usize },
    #[error(transparent)]
    Propagation(#[from] TrustError),
    #[error("trace has no verified content to navigate from")]
    NoContent,
    #[error("could not read links: {0}")]
    Links(#[from] ResourceError),
}

/// Mutable state of a single resolution.
#[derive(Default)]
struct Run {
    steps: Vec<TraceStep>,
    requested: HashSet<String>,
    /// Bytes that matched the digest but came from a host not yet trusted.
    candidate: Option<(TrustyUri, Resource)>,
    retrieved_any: bool,
}

impl Run {
    fn push(&mut self, step: TraceStep) {
        self.steps.push(step);
    }
}

pub struct Resolver<F = HttpFetcher, S = HttpSearch> {
    fetcher: F,
    search: S,
    options: ResolverOptions,
}

impl Resolver {
    pub fn http(options: ResolverOptions) -> Self {
        Self::new(HttpFetcher::default(), HttpSearch, options)
    }
}

impl<F: Fetch, S: Search> Resolver<F, S> {
    pub fn new(fetcher: F, search: S, options: ResolverOptions) -> Self {
        Self {
            fetcher,
            search,
            options,
        }
    }

    pub fn options(&self) -> &ResolverOptions {
        &self.options
    }

    pub async fn resolve(&self, query: &Query, ctx: &TrustContext) -> Result<ResolutionTrace, ResolveError> {
        let mut run = Run::default();
        let (uri, source) = match query {
            Query::Uri { uri, via } => (uri.clone(), via.clone().unwrap_or_default()),
            Query::Terms { terms, source } => {
                run.push(TraceStep::new(Action::Search, source, terms.join(" ")));
                let hits = self
                    .search
                    .search(source, terms)
                    .await
                    .map_err(|reason| ResolveError::SourceUnavailable {
                        source_id: source.clone(),
                        reason,
                    })?;
                let Some(best) = hits.into_iter().next() else {
                    run.push(TraceStep::new(Action::ResultSet, source, ""));
                    let decision = TrustDecision {
                        verdict: crate::trust::Verdict::Untrusted,
                        required_action: RequiredAction::None,
                        rationale: Rationale::UntrustedSourceUntrustedHost,
                    };
                    return Err(not_found(terms.join(" "), run, decision));
                };
                run.push(TraceStep::new(Action::ResultSet, source, best.uri.to_string()));
                (best.uri, source.clone())
            }
        };
        let decision = assess_with(
            &source,
            &uri.authority(),
            &uri,
            ctx,
            self.options.unverified_host,
        );
        self.carry_out(uri, decision, ctx, run).await
    }

    /// Follows trusty link `link_index` (0-based) of a trusted trace's page.
    pub async fn navigate(
        &self,
        from: &ResolutionTrace,
        link_index: usize,
        ctx: &TrustContext,
    ) -> Result<ResolutionTrace, ResolveError> {
        let bindings_from = from.final_decision;
        let (Some(content), Some(base)) = (&from.content, &from.uri) else {
            if !bindings_from.is_trusted() {
                return Err(TrustError::PropagationFromUntrusted(bindings_from.verdict).into());
            }
            return Err(ResolveError::NoContent);
        };
        let links = extract_links(content, &base.to_string())?;
        let bindings = propagate(&bindings_from, &links)?;
        let link = links
            .trusty_links
            .get(link_index)
            .ok_or(ResolveError::LinkIndexOutOfRange {
                index: link_index,
                count: links.trusty_links.len(),
            })?;
        let binding = bindings[link];
        let decision = assess_link(binding, &link.authority(), ctx, self.options.unverified_host);
        self.carry_out(link.clone(), decision, ctx, Run::default()).await
    }

    async fn carry_out(
        &self,
        uri: TrustyUri,
        decision: TrustDecision,
        ctx: &TrustContext,
        mut run: Run,
    ) -> Result<ResolutionTrace, ResolveError> {
        let host = uri.authority();
        let mut last = decision.required_action;
        match decision.required_action {
            RequiredAction::None => {
                if let Some(resource) = self.request(&mut run, &uri, &host).await {
                    return Ok(done(run, decision, uri, resource));
                }
            }
            RequiredAction::LocalDigestCheck => {
                if let Some(resource) = self.request_and_check(&mut run, &uri, &host).await {
                    return Ok(done(run, decision, uri, resource));
                }
            }
            RequiredAction::RevalidateViaTrusted | RequiredAction::ValidatorQuorum => {
                let first_untrusted = decision.rationale == Rationale::UntrustedSourceUntrustedHost
                    && !self.options.paranoid;
                if first_untrusted {
                    if let Some(resource) = self.request(&mut run, &uri, &host).await {
                        run.candidate = Some((uri.clone(), resource));
                    }
                }
            }
        }

        if decision.required_action != RequiredAction::ValidatorQuorum
            && (ctx.trusted_sources().next().is_some() || ctx.trusted_hosts().next().is_some())
        {
            last = RequiredAction::RevalidateViaTrusted;
            if let Some((at, resource)) = self.revalidate(&mut run, &uri, ctx).await {
                return Ok(done(run, decision, at, resource));
            }
        }
        if !ctx.validators().is_empty() {
            last = RequiredAction::ValidatorQuorum;
            if let Some((at, resource)) = self.quorum(&mut run, &uri, ctx).await {
                return Ok(done(run, decision, at, resource));
            }
        }
        let exhausted = decision.exhausted(last);
        if !run.retrieved_any {
            return Err(not_found(uri.to_string(), run, exhausted));
        }
        Ok(ResolutionTrace {
            steps: run.steps,
            final_decision: exhausted,
            uri: None,
            content: None,
        })
    }

    /// request + response. Returns the resource only if it matches `uri`.
    async fn request(&self, run: &mut Run, uri: &TrustyUri, peer: &str) -> Option<Resource> {
        run.requested.insert(uri.to_string());
        run.push(TraceStep::new(Action::Request, peer, uri.to_string()));
        match self.fetcher.fetch(uri).await {
            Ok(resource) => {
                run.retrieved_any = true;
                let ok = uri.verify(resource.content()).is_match();
                run.push(TraceStep::new(Action::Response, peer, uri.to_string()).verified(ok));
                ok.then_some(resource)
            }
            Err(e) => {
                log_fetch_error(&e);
                run.push(TraceStep::new(Action::Response, peer, uri.to_string()));
                None
            }
        }
    }

    /// request + response + an explicit local digest check.
    async fn request_and_check(&self, run: &mut Run, uri: &TrustyUri, peer: &str) -> Option<Resource> {
        run.requested.insert(uri.to_string());
        run.push(TraceStep::new(Action::Request, peer, uri.to_string()));
        let resource = match self.fetcher.fetch(uri).await {
            Ok(resource) => resource,
            Err(e) => {
                log_fetch_error(&e);
                run.push(TraceStep::new(Action::Response, peer, uri.to_string()));
                return None;
            }
        };
        run.retrieved_any = true;
        run.push(TraceStep::new(Action::Response, peer, uri.to_string()));
        let outcome = uri.verify(resource.content());
        run.push(TraceStep::new(Action::Check, LOCAL_PEER, uri.to_string()).verified(outcome.is_match()));
        match outcome {
            VerificationOutcome::Match => Some(resource),
            VerificationOutcome::Mismatch { actual, .. } => {
                tracing::warn!(%uri, %actual, "local digest check failed");
                None
            }
        }
    }

    /// Looks the digest up at every trusted source and fetches it from a
    /// trusted host; then tries the trusted hosts directly.
    async fn revalidate(
        &self,
        run: &mut Run,
        uri: &TrustyUri,
        ctx: &TrustContext,
    ) -> Option<(TrustyUri, Resource)> {
        let sources: Vec<String> = ctx.trusted_sources().map(str::to_string).collect();
        for source in &sources {
            run.push(TraceStep::new(Action::Search, source, uri.to_string()));
            let hits = self.search.lookup(source, uri.digest()).await.unwrap_or_else(|e| {
                tracing::warn!(%source, error = %e, "trusted source unavailable");
                Vec::new()
            });
            let candidates: Vec<TrustyUri> = hits
                .into_iter()
                .map(|h| h.uri)
                .filter(|u| u.digest() == uri.digest() && ctx.trusts_host(&u.authority()))
                .collect();
            let shown = candidates.first().map(ToString::to_string).unwrap_or_default();
            run.push(TraceStep::new(Action::ResultSet, source, shown));
            for candidate in candidates {
                if run.requested.contains(&candidate.to_string()) {
                    continue;
                }
                let host = candidate.authority();
                if let Some(resource) = self.request(run, &candidate, &host).await {
                    return Some((candidate, resource));
                }
            }
        }
        let hosts: Vec<String> = ctx.trusted_hosts().map(str::to_string).collect();
        for host in hosts {
            let Ok(location) = uri.with_authority(&host) else {
                continue;
            };
            if run.requested.contains(&location.to_string()) {
                continue;
            }
            if let Some(resource) = self.request(run, &location, &host).await {
                return Some((location, resource));
            }
        }
        None
    }

    async fn quorum(
        &self,
        run: &mut Run,
        uri: &TrustyUri,
        ctx: &TrustContext,
    ) -> Option<(TrustyUri, Resource)> {
        let validators = ctx.validators();
        let accepted = match quorum_validate(uri, validators, self.options.quorum_threshold).await {
            Ok(outcome) => {
                for vote in &outcome.votes {
                    let mut step = TraceStep::new(Action::Validate, &vote.validator, uri.to_string());
                    step.verified = vote.agreed;
                    run.push(step);
                }
                outcome.accepted
            }
            Err(e) => {
                if matches!(e, QuorumError::AllValidatorsUnreachable(_)) {
                    for validator in validators {
                        run.push(TraceStep::new(Action::Validate, validator, uri.to_string()));
                    }
                }
                tracing::warn!(%uri, error = %e, "validator quorum unavailable");
                false
            }
        };
        if !accepted {
            return None;
        }
        if let Some(candidate) = run.candidate.take() {
            return Some(candidate);
        }
        if run.requested.contains(&uri.to_string()) {
            return None;
        }
        let host = uri.authority();
        self.request(run, uri, &host).await.map(|r| (uri.clone(), r))
    }
}

fn log_fetch_error(e: &FetchError) {
    tracing::warn!(error = %e, "fetch failed");
}

fn done(run: Run, decision: TrustDecision, uri: TrustyUri, resource: Resource) -> ResolutionTrace {
    ResolutionTrace {
        steps: run.steps,
        final_decision: decision.satisfied(),
        uri: Some(uri),
        content: Some(resource),
    }
}

fn not_found(subject: String, run: Run, decision: TrustDecision) -> ResolveError {
    ResolveError::NotFoundAnywhere {
        subject,
        trace: Box::new(ResolutionTrace {
            steps: run.steps,
            final_decision: decision,
            uri: None,
            content: None,
        }),
    }
}
