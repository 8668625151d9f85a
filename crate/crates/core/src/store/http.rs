//! HTTP surface of the publisher.
//!
//! - `GET /<hex64>`: content bytes, `Content-Type` from the record, plus
//!   `X-Trusty-Parent` and `X-Trusty-Published`. 404 unknown, 500 when the
//!   stored bytes no longer match their digest.
//! - `POST /publish`: body is the content; `X-Trusty-Author` (required),
//!   `X-Trusty-Parent` (`root` or a trusty URI, optional),
//!   `X-Trusty-Parent-External: true`, `X-Trusty-Published` (optional claimed
//!   RFC 3339 time). 201 created, 200 already published, 409 collision,
//!   422 unknown parent.
//! - `GET /chain/<hex64>`: JSON array of records, newest first.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;

use super::{ParentSpec, PublishRequest, Store, StoreError};
use crate::digest::Digest;
use crate::resource::{format_timestamp, parse_timestamp, Parent, Resource, OCTET_STREAM};
use crate::uri::TrustyUri;

pub const AUTHOR_HEADER: &str = "x-trusty-author";
pub const PARENT_HEADER: &str = "x-trusty-parent";
pub const PARENT_EXTERNAL_HEADER: &str = "x-trusty-parent-external";
pub const PUBLISHED_HEADER: &str = "x-trusty-published";
pub const ROOT_PARENT: &str = "root";

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/publish", post(publish))
        .route("/chain/{digest}", get(chain))
        .route("/{digest}", get(fetch))
        .with_state(store)
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(err: StoreError) -> Self {
        let status = match &err {
            StoreError::NotFound(_) => StatusCode::NOT_FOUND,
            StoreError::ProvableCollision(_) => StatusCode::CONFLICT,
            StoreError::ParentNotFound(_) => StatusCode::UNPROCESSABLE_ENTITY,
            StoreError::ClockSkew { .. } | StoreError::RootParentNotAllowed(_) => {
                StatusCode::BAD_REQUEST
            }
            StoreError::IntegrityFailure { .. }
            | StoreError::BaseUri(_)
            | StoreError::CorruptMetadata { .. }
            | StoreError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            tracing::error!(error = %err, "publisher failure");
        }
        ApiError(status, err.to_string())
    }
}

fn bad_request(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.into())
}

fn parse_digest(text: &str) -> Result<Digest, ApiError> {
    Digest::parse_hex(text).map_err(|e| ApiError(StatusCode::NOT_FOUND, e.to_string()))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, StoreError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
}

async fn fetch(
    State(store): State<Arc<Store>>,
    Path(digest): Path<String>,
) -> Result<Response, ApiError> {
    let digest = parse_digest(&digest)?;
    let (resource, record) = blocking(move || store.fetch(&digest)).await?;
    let parent = match &record.meta.parent {
        Parent::Root(_) => ROOT_PARENT.to_string(),
        Parent::Resource(uri) => uri.to_string(),
    };
    let mut headers = HeaderMap::new();
    let value = |s: &str| HeaderValue::from_str(s).unwrap_or(HeaderValue::from_static(OCTET_STREAM));
    headers.insert(header::CONTENT_TYPE, value(resource.media_type()));
    headers.insert(PARENT_HEADER, value(&parent));
    headers.insert(
        PUBLISHED_HEADER,
        value(&format_timestamp(&record.meta.published_at)),
    );
    Ok((StatusCode::OK, headers, resource.into_content()).into_response())
}

fn header_str<'a>(headers: &'a HeaderMap, name: &str) -> Result<Option<&'a str>, ApiError> {
    headers
        .get(name)
        .map(|v| {
            v.to_str()
                .map(str::trim)
                .map_err(|_| bad_request(format!("header {name} is not valid text")))
        })
        .transpose()
}

/// Reads a parent given as `root`, a trusty URI, or nothing.
pub fn parent_spec(parent: Option<&str>, external: bool) -> Result<ParentSpec, String> {
    match parent {
        None | Some("") => Ok(ParentSpec::Auto),
        Some(p) if p.eq_ignore_ascii_case(ROOT_PARENT) => Ok(ParentSpec::Root),
        Some(p) => {
            let uri = TrustyUri::parse(p).map_err(|e| e.to_string())?;
            Ok(if external {
                ParentSpec::External(uri)
            } else {
                ParentSpec::Local(uri)
            })
        }
    }
}

async fn publish(
    State(store): State<Arc<Store>>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    let author = header_str(&headers, AUTHOR_HEADER)?
        .filter(|a| !a.is_empty())
        .ok_or_else(|| bad_request("missing X-Trusty-Author"))?
        .to_string();
    let external = header_str(&headers, PARENT_EXTERNAL_HEADER)?
        .is_some_and(|v| v.eq_ignore_ascii_case("true") || v == "1");
    let parent = parent_spec(header_str(&headers, PARENT_HEADER)?, external).map_err(bad_request)?;
    let claimed_at = header_str(&headers, PUBLISHED_HEADER)?
        .map(|t| parse_timestamp(t).map_err(|e| bad_request(format!("X-Trusty-Published: {e}"))))
        .transpose()?;
    let media_type = header_str(&headers, header::CONTENT_TYPE.as_str())?.unwrap_or(OCTET_STREAM);
    let resource = Resource::new(body.to_vec(), media_type).map_err(|e| bad_request(e.to_string()))?;

    let request = PublishRequest {
        resource,
        author,
        parent,
        claimed_at,
    };
    let outcome = blocking(move || store.publish(request)).await?;
    let status = if outcome.created {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((status, Json(outcome.record)).into_response())
}

async fn chain(
    State(store): State<Arc<Store>>,
    Path(digest): Path<String>,
) -> Result<Response, ApiError> {
    let digest = parse_digest(&digest)?;
    let chain = blocking(move || store.chain_of(&digest)).await?;
    Ok(Json(chain.records).into_response())
}
