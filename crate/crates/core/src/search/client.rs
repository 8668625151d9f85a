use reqwest::StatusCode;
use thiserror::Error;
use url::Url;

use super::{IndexStatus, SearchHit};
use crate::digest::Digest;
use crate::fetch::{http_client, DEFAULT_TIMEOUT};

#[derive(Debug, Error)]
pub enum SearchClientError {
    #[error("invalid search endpoint `{0}`")]
    Endpoint(String),
    #[error("search service unreachable: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("search service answered with status {0}")]
    Status(u16),
}

/// Queries a search service over HTTP.
#[derive(Debug, Clone)]
pub struct SearchClient {
    endpoint: Url,
    http: reqwest::Client,
}

impl SearchClient {
    pub fn new(endpoint: &str) -> Result<Self, SearchClientError> {
        let with_scheme = if endpoint.contains("://") {
            endpoint.to_string()
        } else {
            format!("http://{endpoint}/")
        };
        let endpoint = Url::parse(&with_scheme)
            .map_err(|_| SearchClientError::Endpoint(endpoint.to_string()))?;
        Ok(Self {
            endpoint,
            http: http_client(DEFAULT_TIMEOUT),
        })
    }

    /// `host:port` of the service; this is its source identity.
    pub fn authority(&self) -> String {
        match self.endpoint.port() {
            Some(port) => format!("{}:{port}", self.endpoint.host_str().unwrap_or_default()),
            None => self.endpoint.host_str().unwrap_or_default().to_string(),
        }
    }

    async fn get<T: serde::de::DeserializeOwned>(
        &self,
        path: &str,
        query: &[(&str, String)],
    ) -> Result<T, SearchClientError> {
        let mut url = self.endpoint.join(path).expect("static relative path");
        if !query.is_empty() {
            url.query_pairs_mut().extend_pairs(query);
        }
        let response = self.http.get(url).send().await?;
        match response.status() {
            StatusCode::OK => Ok(response.json().await?),
            status => Err(SearchClientError::Status(status.as_u16())),
        }
    }

    pub async fn search<S: AsRef<str>>(&self, terms: &[S]) -> Result<Vec<SearchHit>, SearchClientError> {
        let q = terms.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
        self.get("search", &[("q", q)]).await
    }

    pub async fn lookup(&self, digest: &Digest) -> Result<Vec<SearchHit>, SearchClientError> {
        self.get("search", &[("digest", digest.to_hex())]).await
    }

    pub async fn status(&self) -> Result<IndexStatus, SearchClientError> {
        self.get("status", &[]).await
    }
}
