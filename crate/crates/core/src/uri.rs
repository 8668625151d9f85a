//! Trusty URIs: minting, parsing, classification and verification.
//!
//! Grammar (bit-exact):
//!
//! ```text
//! trusty-uri = scheme "://" authority prefix-path "/" hex64
//! scheme     = "http" / "https"
//! hex64      = 64 * ( %x30-39 / %x61-66 )   ; lowercase hex digest
//! ```
//!
//! The digest is the entire final path segment. URIs carrying userinfo, a
//! query or a fragment are never trusty: they would not round-trip through
//! the grammar above.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;
use url::Url;

use crate::digest::{compute_digest, Digest};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UriError {
    #[error("unparseable URI `{uri}`: {reason}")]
    Unparseable { uri: String, reason: String },
    #[error("`{0}` is not a trusty URI")]
    NotTrusty(String),
    #[error("malformed base URI `{uri}`: {reason}")]
    MalformedBase { uri: String, reason: &'static str },
}

/// A URI whose final path segment is the digest of the resource it names.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrustyUri {
    scheme: String,
    host: String,
    port: Option<u16>,
    prefix: Vec<String>,
    digest: Digest,
}

/// Any syntactically valid URI that is not a [`TrustyUri`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlainUri {
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassifiedUri {
    Trusty(TrustyUri),
    Plain(PlainUri),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum VerificationOutcome {
    Match,
    Mismatch { expected: Digest, actual: Digest },
}

impl VerificationOutcome {
    pub fn is_match(&self) -> bool {
        matches!(self, VerificationOutcome::Match)
    }
}

impl TrustyUri {
    /// Parses `raw`, failing unless it is a trusty URI.
    pub fn parse(raw: &str) -> Result<Self, UriError> {
        match classify_uri(raw)? {
            ClassifiedUri::Trusty(uri) => Ok(uri),
            ClassifiedUri::Plain(_) => Err(UriError::NotTrusty(raw.to_string())),
        }
    }

    pub fn scheme(&self) -> &str {
        &self.scheme
    }

    pub fn host(&self) -> &str {
        &self.host
    }

    pub fn port(&self) -> Option<u16> {
        self.port
    }

    /// `host[:port]`, lowercase, default port elided.
    pub fn authority(&self) -> String {
        match self.port {
            Some(port) => format!("{}:{port}", self.host),
            None => self.host.clone(),
        }
    }

    pub fn prefix_path(&self) -> &[String] {
        &self.prefix
    }

    pub fn digest(&self) -> &Digest {
        &self.digest
    }

    /// The minting base this URI was produced from, always ending in `/`.
    pub fn base(&self) -> String {
        let mut out = format!("{}://{}/", self.scheme, self.authority());
        for segment in &self.prefix {
            out.push_str(segment);
            out.push('/');
        }
        out
    }

    /// Same digest and path, served by a different authority.
    pub fn with_authority(&self, authority: &str) -> Result<Self, UriError> {
        let raw = format!(
            "{}://{}/{}",
            self.scheme,
            authority,
            self.path_without_leading_slash()
        );
        Self::parse(&raw)
    }

    fn path_without_leading_slash(&self) -> String {
        let mut out = String::new();
        for segment in &self.prefix {
            out.push_str(segment);
            out.push('/');
        }
        out.push_str(&self.digest.to_hex());
        out
    }

    /// Compares `content` against the embedded digest.
    pub fn verify(&self, content: &[u8]) -> VerificationOutcome {
        verify(self, content)
    }
}

impl fmt::Display for TrustyUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}://{}/{}",
            self.scheme,
            self.authority(),
            self.path_without_leading_slash()
        )
    }
}

impl fmt::Debug for TrustyUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TrustyUri({self})")
    }
}

impl FromStr for TrustyUri {
    type Err = UriError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for TrustyUri {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TrustyUri {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Self::parse(&text).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for PlainUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl ClassifiedUri {
    pub fn as_trusty(&self) -> Option<&TrustyUri> {
        match self {
            ClassifiedUri::Trusty(uri) => Some(uri),
            ClassifiedUri::Plain(_) => None,
        }
    }
}

impl fmt::Display for ClassifiedUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassifiedUri::Trusty(uri) => uri.fmt(f),
            ClassifiedUri::Plain(uri) => uri.fmt(f),
        }
    }
}

/// Purely syntactic classification; says nothing about content validity.
pub fn classify_uri(raw: &str) -> Result<ClassifiedUri, UriError> {
    let url = Url::parse(raw).map_err(|e| UriError::Unparseable {
        uri: raw.to_string(),
        reason: e.to_string(),
    })?;
    Ok(classify_url(&url))
}

pub(crate) fn classify_url(url: &Url) -> ClassifiedUri {
    match trusty_from_url(url) {
        Some(uri) => ClassifiedUri::Trusty(uri),
        None => ClassifiedUri::Plain(PlainUri {
            raw: url.to_string(),
        }),
    }
}

fn trusty_from_url(url: &Url) -> Option<TrustyUri> {
    if !has_plain_http_authority(url) || url.query().is_some() || url.fragment().is_some() {
        return None;
    }
    let mut segments: Vec<String> = url.path_segments()?.map(str::to_string).collect();
    let last = segments.pop()?;
    if !Digest::is_canonical_text(&last) {
        return None;
    }
    Some(TrustyUri {
        scheme: url.scheme().to_string(),
        host: url.host_str()?.to_string(),
        port: url.port(),
        prefix: segments,
        digest: Digest::parse_hex(&last).ok()?,
    })
}

fn has_plain_http_authority(url: &Url) -> bool {
    matches!(url.scheme(), "http" | "https")
        && url.host_str().is_some_and(|h| !h.is_empty())
        && url.username().is_empty()
        && url.password().is_none()
}

/// Mints the trusty URI for `content` under `base`.
///
/// `base` is `scheme://authority[/prefix...]`; a trailing slash is optional.
pub fn mint(base: &str, content: &[u8]) -> Result<TrustyUri, UriError> {
    mint_with_digest(base, compute_digest(content))
}

/// Like [`mint`] for an already computed digest.
pub fn mint_with_digest(base: &str, digest: Digest) -> Result<TrustyUri, UriError> {
    let malformed = |reason| UriError::MalformedBase {
        uri: base.to_string(),
        reason,
    };
    let url = Url::parse(base).map_err(|_| malformed("not a URI"))?;
    if !has_plain_http_authority(&url) {
        return Err(malformed("expected an http(s) URI with a host and no userinfo"));
    }
    if url.query().is_some() || url.fragment().is_some() {
        return Err(malformed("base must not carry a query or fragment"));
    }
    let mut prefix: Vec<String> = url
        .path_segments()
        .map(|s| s.map(str::to_string).collect())
        .unwrap_or_default();
    if prefix.last().is_some_and(String::is_empty) {
        prefix.pop();
    }
    if prefix.last().is_some_and(|s| Digest::is_canonical_text(s)) {
        return Err(malformed("base already ends in a digest segment"));
    }
    Ok(TrustyUri {
        scheme: url.scheme().to_string(),
        host: url.host_str().unwrap_or_default().to_string(),
        port: url.port(),
        prefix,
        digest,
    })
}

pub fn verify(uri: &TrustyUri, content: &[u8]) -> VerificationOutcome {
    let actual = compute_digest(content);
    if actual == uri.digest {
        VerificationOutcome::Match
    } else {
        VerificationOutcome::Mismatch {
            expected: uri.digest,
            actual,
        }
    }
}
