//! Trust decisions over (source, host) pairs.
//!
//! A *source* is the search service (or referring page) that handed out a
//! URI; a *host* is the server the bytes come from. Trust in each is plain
//! set membership in a [`TrustContext`], giving four cases:
//!
//! | source | host | verdict                        | follow-up                |
//! |--------|------|--------------------------------|--------------------------|
//! | S+     | H+   | Trusted                        | none                     |
//! | S+     | H-   | TrustedUriContentUnverified    | local digest check       |
//! | S-     | H+   | Trusted                        | none                     |
//! | S-     | H-   | Untrusted                      | revalidate via S+/H+     |
//!
//! In the S-H+ case the URI itself came from an untrusted source; it is
//! accepted because the trusted host serves it. The resolver still checks
//! the digest of every response.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::resource::LinkSet;
use crate::uri::TrustyUri;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrustError {
    #[error("cannot propagate link trust from a {0:?} resource")]
    PropagationFromUntrusted(Verdict),
    #[error("attestor `{0}` is not a trusted host")]
    UntrustedAttestor(String),
}

#[derive(Debug, Error)]
pub enum ContextLoadError {
    #[error("reading trust context: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing trust context: {0}")]
    Json(#[from] serde_json::Error),
}

/// Normalizes an authority: lowercase, default http(s) ports elided.
pub fn normalize_authority(authority: &str) -> String {
    let lower = authority.trim().trim_end_matches('/').to_ascii_lowercase();
    for default_port in [":80", ":443"] {
        if let Some(stripped) = lower.strip_suffix(default_port) {
            return stripped.to_string();
        }
    }
    lower
}

/// The client's trust anchors.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrustContext {
    #[serde(default, deserialize_with = "normalized_set")]
    trusted_sources: BTreeSet<String>,
    #[serde(default, deserialize_with = "normalized_set")]
    trusted_hosts: BTreeSet<String>,
    #[serde(default)]
    validators: Vec<String>,
}

fn normalized_set<'de, D: serde::Deserializer<'de>>(d: D) -> Result<BTreeSet<String>, D::Error> {
    let raw = Vec::<String>::deserialize(d)?;
    Ok(raw.iter().map(|a| normalize_authority(a)).collect())
}

impl TrustContext {
    pub fn new<S, H, I, J>(sources: I, hosts: J) -> Self
    where
        S: AsRef<str>,
        H: AsRef<str>,
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = H>,
    {
        Self {
            trusted_sources: sources
                .into_iter()
                .map(|s| normalize_authority(s.as_ref()))
                .collect(),
            trusted_hosts: hosts
                .into_iter()
                .map(|h| normalize_authority(h.as_ref()))
                .collect(),
            validators: Vec::new(),
        }
    }

    pub fn with_validators(mut self, validators: impl IntoIterator<Item = String>) -> Self {
        self.validators = validators.into_iter().collect();
        self
    }

    pub fn load(path: &Path) -> Result<Self, ContextLoadError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn trusts_source(&self, source: &str) -> bool {
        self.trusted_sources.contains(&normalize_authority(source))
    }

    pub fn trusts_host(&self, host: &str) -> bool {
        self.trusted_hosts.contains(&normalize_authority(host))
    }

    pub fn trusted_sources(&self) -> impl Iterator<Item = &str> {
        self.trusted_sources.iter().map(String::as_str)
    }

    pub fn trusted_hosts(&self) -> impl Iterator<Item = &str> {
        self.trusted_hosts.iter().map(String::as_str)
    }

    pub fn validators(&self) -> &[String] {
        &self.validators
    }

    /// True when at least one trusted source and one trusted host exist, so
    /// revalidation through them is possible at all.
    pub fn has_trusted_pair(&self) -> bool {
        !self.trusted_sources.is_empty() && !self.trusted_hosts.is_empty()
    }

    pub fn add_source(&mut self, source: &str) {
        self.trusted_sources.insert(normalize_authority(source));
    }

    pub fn add_host(&mut self, host: &str) {
        self.trusted_hosts.insert(normalize_authority(host));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Untrusted,
    TrustedUriContentUnverified,
    Trusted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequiredAction {
    None,
    LocalDigestCheck,
    RevalidateViaTrusted,
    ValidatorQuorum,
}

/// Which of the four (source, host) cases produced a decision, or link
/// propagation from an already trusted page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rationale {
    #[serde(rename = "S+H+")]
    TrustedSourceTrustedHost,
    #[serde(rename = "S+H-")]
    TrustedSourceUntrustedHost,
    #[serde(rename = "S-H+")]
    UntrustedSourceTrustedHost,
    #[serde(rename = "S-H-")]
    UntrustedSourceUntrustedHost,
    #[serde(rename = "LinkPropagation")]
    LinkPropagation,
}

impl fmt::Display for Rationale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rationale::TrustedSourceTrustedHost => "S+H+",
            Rationale::TrustedSourceUntrustedHost => "S+H-",
            Rationale::UntrustedSourceTrustedHost => "S-H+",
            Rationale::UntrustedSourceUntrustedHost => "S-H-",
            Rationale::LinkPropagation => "LinkPropagation",
        })
    }
}

/// A verdict together with the follow-up the client must perform.
///
/// `verdict == Trusted` exactly when `required_action == None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrustDecision {
    pub verdict: Verdict,
    pub required_action: RequiredAction,
    pub rationale: Rationale,
}

impl TrustDecision {
    pub const fn trusted(rationale: Rationale) -> Self {
        Self {
            verdict: Verdict::Trusted,
            required_action: RequiredAction::None,
            rationale,
        }
    }

    pub fn is_trusted(&self) -> bool {
        self.verdict == Verdict::Trusted
    }

    /// The decision after the required follow-up succeeded.
    pub fn satisfied(self) -> Self {
        Self::trusted(self.rationale)
    }

    /// The decision after every follow-up was exhausted.
    pub fn exhausted(self, last_action: RequiredAction) -> Self {
        Self {
            verdict: Verdict::Untrusted,
            required_action: last_action,
            rationale: self.rationale,
        }
    }
}

/// Follow-up chosen when a trusted source points at an untrusted host.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnverifiedHostAction {
    #[default]
    LocalDigestCheck,
    RevalidateViaTrusted,
}

impl From<UnverifiedHostAction> for RequiredAction {
    fn from(action: UnverifiedHostAction) -> Self {
        match action {
            UnverifiedHostAction::LocalDigestCheck => RequiredAction::LocalDigestCheck,
            UnverifiedHostAction::RevalidateViaTrusted => RequiredAction::RevalidateViaTrusted,
        }
    }
}

/// Decides how far to trust `uri`, received from `source` and served by
/// `host`, using the default follow-up for the S+H- case.
pub fn assess(source: &str, host: &str, uri: &TrustyUri, ctx: &TrustContext) -> TrustDecision {
    assess_with(source, host, uri, ctx, UnverifiedHostAction::default())
}

pub fn assess_with(
    source: &str,
    host: &str,
    _uri: &TrustyUri,
    ctx: &TrustContext,
    unverified_host: UnverifiedHostAction,
) -> TrustDecision {
    match (ctx.trusts_source(source), ctx.trusts_host(host)) {
        (true, true) => TrustDecision::trusted(Rationale::TrustedSourceTrustedHost),
        (true, false) => TrustDecision {
            verdict: Verdict::TrustedUriContentUnverified,
            required_action: unverified_host.into(),
            rationale: Rationale::TrustedSourceUntrustedHost,
        },
        (false, true) => TrustDecision::trusted(Rationale::UntrustedSourceTrustedHost),
        (false, false) => TrustDecision {
            verdict: Verdict::Untrusted,
            required_action: if ctx.has_trusted_pair() {
                RequiredAction::RevalidateViaTrusted
            } else {
                RequiredAction::ValidatorQuorum
            },
            rationale: Rationale::UntrustedSourceUntrustedHost,
        },
    }
}

/// Trust a link inherits from the trusted page that contains it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkTrust {
    /// The URI-to-digest binding is authentic. The content still has to be
    /// fetched and checked.
    UriBindingTrusted,
}

/// Marks every trusty link of a trusted page as binding-trusted. Plain links
/// get nothing.
pub fn propagate(
    parent: &TrustDecision,
    links: &LinkSet,
) -> Result<BTreeMap<TrustyUri, LinkTrust>, TrustError> {
    if !parent.is_trusted() {
        return Err(TrustError::PropagationFromUntrusted(parent.verdict));
    }
    Ok(links
        .trusty_links
        .iter()
        .map(|uri| (uri.clone(), LinkTrust::UriBindingTrusted))
        .collect())
}

/// Decision for a link followed out of a trusted page. The binding is
/// trusted, so only the host matters.
pub fn assess_link(
    _binding: LinkTrust,
    host: &str,
    ctx: &TrustContext,
    unverified_host: UnverifiedHostAction,
) -> TrustDecision {
    if ctx.trusts_host(host) {
        TrustDecision::trusted(Rationale::LinkPropagation)
    } else {
        TrustDecision {
            verdict: Verdict::TrustedUriContentUnverified,
            required_action: unverified_host.into(),
            rationale: Rationale::LinkPropagation,
        }
    }
}

/// One-hop attestation: a trusted host vouches for another host.
pub fn promote_host(
    ctx: &TrustContext,
    host: &str,
    attestor: &str,
) -> Result<TrustContext, TrustError> {
    if !ctx.trusts_host(attestor) {
        return Err(TrustError::UntrustedAttestor(attestor.to_string()));
    }
    let mut promoted = ctx.clone();
    promoted.add_host(host);
    Ok(promoted)
}
