use chrono::{DateTime, Utc};
use reqwest::header::CONTENT_TYPE;
use reqwest::StatusCode;
use thiserror::Error;
use url::Url;

use super::http::{AUTHOR_HEADER, PARENT_EXTERNAL_HEADER, PARENT_HEADER, PUBLISHED_HEADER, ROOT_PARENT};
use super::{ParentSpec, PublicationRecord, PublishOutcome};
use crate::digest::Digest;
use crate::fetch::{http_client, DEFAULT_TIMEOUT};
use crate::resource::{format_timestamp, Resource};

#[derive(Debug, Error)]
pub enum PublisherClientError {
    #[error("invalid publisher endpoint `{0}`")]
    Endpoint(String),
    #[error("publisher unreachable: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("content collides with a different resource already published under its digest")]
    ProvableCollision,
    #[error("parent not found: {0}")]
    ParentNotFound(String),
    #[error("not found")]
    NotFound,
    #[error("publisher rejected the request ({status}): {message}")]
    Rejected { status: u16, message: String },
}

/// Talks to a publisher's HTTP interface.
#[derive(Debug, Clone)]
pub struct PublisherClient {
    endpoint: Url,
    http: reqwest::Client,
}

impl PublisherClient {
    pub fn new(endpoint: &str) -> Result<Self, PublisherClientError> {
        let mut endpoint =
            Url::parse(endpoint).map_err(|_| PublisherClientError::Endpoint(endpoint.to_string()))?;
        if !endpoint.path().ends_with('/') {
            let path = format!("{}/", endpoint.path());
            endpoint.set_path(&path);
        }
        Ok(Self {
            endpoint,
            http: http_client(DEFAULT_TIMEOUT),
        })
    }

    pub fn endpoint(&self) -> &Url {
        &self.endpoint
    }

    fn url(&self, path: &str) -> Url {
        self.endpoint.join(path).expect("relative path joins onto an http base")
    }

    pub async fn publish(
        &self,
        resource: &Resource,
        author: &str,
        parent: &ParentSpec,
        claimed_at: Option<DateTime<Utc>>,
    ) -> Result<PublishOutcome, PublisherClientError> {
        let mut request = self
            .http
            .post(self.url("publish"))
            .header(AUTHOR_HEADER, author)
            .header(CONTENT_TYPE, resource.media_type())
            .body(resource.content().to_vec());
        request = match parent {
            ParentSpec::Auto => request,
            ParentSpec::Root => request.header(PARENT_HEADER, ROOT_PARENT),
            ParentSpec::Local(uri) => request.header(PARENT_HEADER, uri.to_string()),
            ParentSpec::External(uri) => request
                .header(PARENT_HEADER, uri.to_string())
                .header(PARENT_EXTERNAL_HEADER, "true"),
        };
        if let Some(at) = claimed_at {
            request = request.header(PUBLISHED_HEADER, format_timestamp(&at));
        }
        let response = request.send().await?;
        let status = response.status();
        match status {
            StatusCode::CREATED | StatusCode::OK => Ok(PublishOutcome {
                record: response.json().await?,
                created: status == StatusCode::CREATED,
            }),
            StatusCode::CONFLICT => Err(PublisherClientError::ProvableCollision),
            StatusCode::UNPROCESSABLE_ENTITY => Err(PublisherClientError::ParentNotFound(
                error_message(response).await,
            )),
            _ => Err(PublisherClientError::Rejected {
                status: status.as_u16(),
                message: error_message(response).await,
            }),
        }
    }

    pub async fn chain(&self, digest: &Digest) -> Result<Vec<PublicationRecord>, PublisherClientError> {
        let response = self
            .http
            .get(self.url(&format!("chain/{digest}")))
            .send()
            .await?;
        match response.status() {
            StatusCode::OK => Ok(response.json().await?),
            StatusCode::NOT_FOUND => Err(PublisherClientError::NotFound),
            status => Err(PublisherClientError::Rejected {
                status: status.as_u16(),
                message: error_message(response).await,
            }),
        }
    }
}

async fn error_message(response: reqwest::Response) -> String {
    let text = response.text().await.unwrap_or_default();
    serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .and_then(|v| v.get("error").and_then(|e| e.as_str()).map(str::to_string))
        .unwrap_or(text)
}
