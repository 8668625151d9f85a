//! Content-addressed web provenance.
//!
//! Resources are named by trusty URIs whose final path segment is the
//! SHA-256 digest of the content. On top of that primitive this crate
//! provides a publish-once store, a crawler that only indexes verified pages,
//! validators with quorum aggregation, and a client resolver that decides
//! whether to trust a resource from the trust placed in its source and host.

pub mod corpus;
pub mod digest;
pub mod fetch;
pub mod harness;
pub mod resolver;
pub mod resource;
pub mod search;
pub mod service;
pub mod store;
pub mod trust;
pub mod uri;
pub mod validator;

pub use digest::{compute_digest, compute_digest_streaming, Algorithm, Digest, DigestFormat};
pub use resource::{extract_links, LinkSet, Parent, PublicationMeta, Resource};
pub use uri::{classify_uri, mint, verify, ClassifiedUri, PlainUri, TrustyUri, VerificationOutcome};
pub use fetch::{Fetch, FetchError, HttpFetcher};
pub use search::{SearchHit, SearchIndex};
pub use store::{ParentSpec, PublicationRecord, Store, StoreError};
pub use trust::{assess, RequiredAction, TrustContext, TrustDecision, Verdict};
