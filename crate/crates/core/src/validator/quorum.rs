//! Fan-out validation across several validators.

use chrono::{DateTime, Utc};
use futures::future::join_all;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use super::http::URI_HEADER;
use super::ValidationReport;
use crate::fetch::{http_client, DEFAULT_TIMEOUT};
use crate::resource::parse_timestamp;
use crate::uri::TrustyUri;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuorumError {
    #[error("no validators given")]
    NoValidators,
    #[error("threshold {threshold} outside 1..={validators}")]
    InvalidThreshold { threshold: usize, validators: usize },
    #[error("none of the {0} validators could be reached")]
    AllValidatorsUnreachable(usize),
}

#[derive(Debug, Error)]
pub enum ValidatorClientError {
    #[error("invalid validator endpoint `{0}`")]
    Endpoint(String),
    #[error("validator unreachable: {0}")]
    Unreachable(#[from] reqwest::Error),
    #[error("validator could not fetch the resource: {0}")]
    FetchFailed(String),
    #[error("validator answered with status {status}: {message}")]
    Status { status: u16, message: String },
}

impl ValidatorClientError {
    fn reachable(&self) -> bool {
        !matches!(self, Self::Unreachable(_) | Self::Endpoint(_))
    }
}

#[derive(Debug, Clone)]
pub struct ValidatorClient {
    endpoint: Url,
    http: reqwest::Client,
}

pub(crate) fn endpoint_url(endpoint: &str) -> Option<Url> {
    let text = if endpoint.contains("://") {
        endpoint.to_string()
    } else {
        format!("http://{endpoint}/")
    };
    Url::parse(&text).ok()
}

impl ValidatorClient {
    pub fn new(endpoint: &str) -> Result<Self, ValidatorClientError> {
        Ok(Self {
            endpoint: endpoint_url(endpoint)
                .ok_or_else(|| ValidatorClientError::Endpoint(endpoint.to_string()))?,
            http: http_client(DEFAULT_TIMEOUT),
        })
    }

    async fn read(response: reqwest::Response) -> Result<ValidationReport, ValidatorClientError> {
        let status = response.status();
        if status == StatusCode::OK {
            return Ok(response.json().await?);
        }
        let message = response.text().await.unwrap_or_default();
        Err(if status == StatusCode::BAD_GATEWAY {
            ValidatorClientError::FetchFailed(message)
        } else {
            ValidatorClientError::Status {
                status: status.as_u16(),
                message,
            }
        })
    }

    /// Asks the validator to fetch and check `uri` itself.
    pub async fn validate(&self, uri: &TrustyUri) -> Result<ValidationReport, ValidatorClientError> {
        let mut url = self.endpoint.join("validate").expect("static path");
        url.query_pairs_mut().append_pair("uri", &uri.to_string());
        Self::read(self.http.get(url).send().await?).await
    }

    /// Submits bytes the caller already holds.
    pub async fn validate_content(
        &self,
        uri: &TrustyUri,
        content: &[u8],
    ) -> Result<ValidationReport, ValidatorClientError> {
        let url = self.endpoint.join("validate").expect("static path");
        let response = self
            .http
            .post(url)
            .header(URI_HEADER, uri.to_string())
            .body(content.to_vec())
            .send()
            .await?;
        Self::read(response).await
    }

    pub async fn first_seen(
        &self,
        digest: &crate::digest::Digest,
    ) -> Result<Option<DateTime<Utc>>, ValidatorClientError> {
        let url = self.endpoint.join(&format!("seen/{digest}")).expect("static path");
        let response = self.http.get(url).send().await?;
        match response.status() {
            StatusCode::NOT_FOUND => Ok(None),
            StatusCode::OK => {
                let body: serde_json::Value = response.json().await?;
                Ok(body["first_seen"].as_str().and_then(|t| parse_timestamp(t).ok()))
            }
            status => Err(ValidatorClientError::Status {
                status: status.as_u16(),
                message: response.text().await.unwrap_or_default(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuorumFailure {
    pub validator: String,
    pub reachable: bool,
    pub reason: String,
}

/// One validator's contribution, in the order validators were given.
/// `agreed` is `None` when the validator produced no report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub validator: String,
    pub agreed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuorumOutcome {
    pub votes: Vec<Vote>,
    pub reports: Vec<ValidationReport>,
    /// Validators that produced no report. They count as non-agreeing.
    pub failures: Vec<QuorumFailure>,
    pub agreeing: usize,
    pub threshold: usize,
    pub accepted: bool,
}

/// Simple majority of `n`.
pub fn default_threshold(n: usize) -> usize {
    n / 2 + 1
}

/// Agreeing votes, and whether they reach `threshold`.
pub fn tally(votes: &[Vote], threshold: usize) -> (usize, bool) {
    let agreeing = votes.iter().filter(|v| v.agreed == Some(true)).count();
    (agreeing, agreeing >= threshold)
}

/// Queries every validator concurrently in directive mode and applies the
/// threshold. `threshold` defaults to a simple majority.
pub async fn quorum_validate(
    uri: &TrustyUri,
    validators: &[String],
    threshold: Option<usize>,
) -> Result<QuorumOutcome, QuorumError> {
    if validators.is_empty() {
        return Err(QuorumError::NoValidators);
    }
    let threshold = threshold.unwrap_or_else(|| default_threshold(validators.len()));
    if threshold == 0 || threshold > validators.len() {
        return Err(QuorumError::InvalidThreshold {
            threshold,
            validators: validators.len(),
        });
    }
    let results = join_all(validators.iter().map(|endpoint| async move {
        let result = match ValidatorClient::new(endpoint) {
            Ok(client) => client.validate(uri).await,
            Err(e) => Err(e),
        };
        (endpoint.clone(), result)
    }))
    .await;

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut votes = Vec::new();
    for (validator, result) in results {
        match result {
            // A report for some other URI is not evidence about this one.
            Ok(report) if report.uri == *uri && report.expected == *uri.digest() => {
                votes.push(Vote {
                    validator: validator.clone(),
                    agreed: Some(report.matches && report.actual == report.expected),
                });
                reports.push(report)
            }
            Ok(report) => {
                votes.push(Vote {
                    validator: validator.clone(),
                    agreed: None,
                });
                failures.push(QuorumFailure {
                    validator,
                    reachable: true,
                    reason: format!("report is about {}", report.uri),
                })
            }
            Err(e) => {
                votes.push(Vote {
                    validator: validator.clone(),
                    agreed: None,
                });
                tracing::warn!(%validator, error = %e, "validator gave no report");
                failures.push(QuorumFailure {
                    validator,
                    reachable: e.reachable(),
                    reason: e.to_string(),
                })
            }
        }
    }
    if reports.is_empty() && failures.iter().all(|f| !f.reachable) {
        return Err(QuorumError::AllValidatorsUnreachable(validators.len()));
    }
    let (agreeing, accepted) = tally(&votes, threshold);
    Ok(QuorumOutcome {
        votes,
        reports,
        failures,
        agreeing,
        threshold,
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority() {
        assert_eq!(default_threshold(1), 1);
        assert_eq!(default_threshold(2), 2);
        assert_eq!(default_threshold(3), 2);
        assert_eq!(default_threshold(4), 3);
        assert_eq!(default_threshold(5), 3);
    }

    #[tokio::test]
    async fn argument_errors() {
        let uri = crate::uri::mint("http://h/", b"x").unwrap();
        assert_eq!(quorum_validate(&uri, &[], None).await, Err(QuorumError::NoValidators));
        let one = vec!["127.0.0.1:9".to_string()];
        assert_eq!(
            quorum_validate(&uri, &one, Some(2)).await,
            Err(QuorumError::InvalidThreshold {
                threshold: 2,
                validators: 1
            })
        );
        assert_eq!(
            quorum_validate(&uri, &one, Some(0)).await,
            Err(QuorumError::InvalidThreshold {
                threshold: 0,
                validators: 1
            })
        );
    }

    #[tokio::test]
    async fn unreachable_everywhere() {
        let uri = crate::uri::mint("http://h/", b"x").unwrap();
        // Bind then drop to get ports nothing listens on.
        let mut dead = Vec::new();
        for _ in 0..2 {
            let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
            dead.push(l.local_addr().unwrap().to_string());
        }
        assert_eq!(
            quorum_validate(&uri, &dead, None).await,
            Err(QuorumError::AllValidatorsUnreachable(2))
        );
    }

    fn vote(agreed: Option<bool>) -> Vote {
        Vote {
            validator: "v".into(),
            agreed,
        }
    }

    proptest::proptest! {
        #[test]
        fn adding_an_agreeing_vote_never_rejects(
            votes in proptest::collection::vec(proptest::option::of(proptest::bool::ANY), 1..9),
            threshold in 1usize..9,
        ) {
            let mut votes: Vec<Vote> = votes.into_iter().map(vote).collect();
            let (agreeing, before) = tally(&votes, threshold);
            proptest::prop_assert_eq!(before, agreeing >= threshold);
            votes.push(vote(Some(true)));
            let (_, after) = tally(&votes, threshold);
            proptest::prop_assert!(!before || after);
        }

        #[test]
        fn majority_is_more_than_half(n in 1usize..1000) {
            let t = default_threshold(n);
            proptest::prop_assert!(2 * t > n && 2 * (t - 1) <= n);
        }
    }
}
