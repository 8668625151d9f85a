//! HTTP retrieval of resources by trusty URI.

use std::collections::HashMap;
use std::time::Duration;

use reqwest::header::CONTENT_TYPE;
use reqwest::StatusCode;
use thiserror::Error;

use crate::resource::{Resource, OCTET_STREAM};
use crate::trust::normalize_authority;
use crate::uri::TrustyUri;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FetchError {
    #[error("{uri}: not found")]
    NotFound { uri: String },
    #[error("{uri}: HTTP status {status}")]
    Status { uri: String, status: u16 },
    #[error("{uri}: {reason}")]
    Transport { uri: String, reason: String },
}

/// Something that can retrieve the bytes named by a trusty URI.
pub trait Fetch: Send + Sync {
    fn fetch(
        &self,
        uri: &TrustyUri,
    ) -> impl std::future::Future<Output = Result<Resource, FetchError>> + Send;
}

/// Fetches over HTTP. Individual authorities can be rerouted to another
/// address, which lets tests give one client a different view of the network
/// than another.
#[derive(Debug, Clone)]
pub struct HttpFetcher {
    client: reqwest::Client,
    routes: HashMap<String, String>,
}

impl Default for HttpFetcher {
    fn default() -> Self {
        Self::new(DEFAULT_TIMEOUT)
    }
}

impl HttpFetcher {
    pub fn new(timeout: Duration) -> Self {
        Self::with_client(http_client(timeout))
    }

    pub fn with_client(client: reqwest::Client) -> Self {
        Self {
            client,
            routes: HashMap::new(),
        }
    }

    /// Sends requests for `authority` to `target` instead.
    pub fn route(mut self, authority: &str, target: &str) -> Self {
        self.routes
            .insert(normalize_authority(authority), target.to_string());
        self
    }

    pub fn client(&self) -> &reqwest::Client {
        &self.client
    }

    fn location(&self, uri: &TrustyUri) -> String {
        match self.routes.get(&normalize_authority(&uri.authority())) {
            Some(target) => uri
                .with_authority(target)
                .map(|u| u.to_string())
                .unwrap_or_else(|_| uri.to_string()),
            None => uri.to_string(),
        }
    }
}

impl Fetch for HttpFetcher {
    async fn fetch(&self, uri: &TrustyUri) -> Result<Resource, FetchError> {
        let location = self.location(uri);
        let transport = |e: reqwest::Error| FetchError::Transport {
            uri: uri.to_string(),
            reason: e.to_string(),
        };
        let response = self.client.get(&location).send().await.map_err(transport)?;
        match response.status() {
            StatusCode::OK => {}
            StatusCode::NOT_FOUND => {
                return Err(FetchError::NotFound {
                    uri: uri.to_string(),
                })
            }
            status => {
                return Err(FetchError::Status {
                    uri: uri.to_string(),
                    status: status.as_u16(),
                })
            }
        }
        let media_type = response
            .headers()
            .get(CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or(OCTET_STREAM)
            .to_string();
        let body = response.bytes().await.map_err(transport)?;
        Ok(Resource::new(body.to_vec(), &media_type)
            .unwrap_or_else(|_| Resource::new(body.to_vec(), OCTET_STREAM).expect("static media type")))
    }
}

pub fn http_client(timeout: Duration) -> reqwest::Client {
    reqwest::Client::builder()
        .timeout(timeout)
        .no_proxy()
        .build()
        .expect("HTTP client configuration is static")
}
