//! HTTP surface of a validator.
//!
//! - `POST /validate`: body is the content, `X-Trusty-Uri` names it.
//! - `GET /validate?uri=<uri>`: the validator fetches the URI itself; 502 if
//!   it cannot.
//! - `GET /seen/<hex64>`: `{first_seen}` or 404.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde_json::json;

use super::{Validator, ValidatorError};
use crate::digest::Digest;
use crate::fetch::Fetch;
use crate::resource::format_timestamp;
use crate::uri::TrustyUri;

pub const URI_HEADER: &str = "x-trusty-uri";

pub fn router<F: Fetch + 'static>(validator: Arc<Validator<F>>) -> Router {
    Router::new()
        .route("/validate", get(directive::<F>).post(submitted::<F>))
        .route("/seen/{digest}", get(seen::<F>))
        .with_state(validator)
}

fn error(status: StatusCode, message: impl ToString) -> Response {
    (status, Json(json!({ "error": message.to_string() }))).into_response()
}

fn report_response(result: Result<super::ValidationReport, ValidatorError>) -> Response {
    match result {
        Ok(report) => Json(report).into_response(),
        Err(e @ ValidatorError::FetchFailed(_)) => error(StatusCode::BAD_GATEWAY, e),
        Err(e @ ValidatorError::Ledger(_)) => {
            tracing::error!(error = %e, "validator ledger failure");
            error(StatusCode::INTERNAL_SERVER_ERROR, e)
        }
    }
}

async fn submitted<F: Fetch + 'static>(
    State(validator): State<Arc<Validator<F>>>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let Some(raw) = headers.get(URI_HEADER).and_then(|v| v.to_str().ok()) else {
        return error(StatusCode::BAD_REQUEST, "missing X-Trusty-Uri");
    };
    match TrustyUri::parse(raw.trim()) {
        Ok(uri) => report_response(validator.validate(&uri, &body)),
        Err(e) => error(StatusCode::BAD_REQUEST, e),
    }
}

async fn directive<F: Fetch + 'static>(
    State(validator): State<Arc<Validator<F>>>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let Some(raw) = params.get("uri") else {
        return error(StatusCode::BAD_REQUEST, "missing uri parameter");
    };
    match TrustyUri::parse(raw) {
        Ok(uri) => report_response(validator.validate_directive(&uri).await),
        Err(e) => error(StatusCode::BAD_REQUEST, e),
    }
}

async fn seen<F: Fetch + 'static>(
    State(validator): State<Arc<Validator<F>>>,
    Path(digest): Path<String>,
) -> Response {
    let first_seen = Digest::parse_hex(&digest)
        .ok()
        .and_then(|d| validator.first_seen(&d));
    match first_seen {
        Some(at) => Json(json!({ "first_seen": format_timestamp(&at) })).into_response(),
        None => error(StatusCode::NOT_FOUND, "not seen"),
    }
}
