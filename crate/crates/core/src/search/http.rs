//! HTTP surface of a search index.
//!
//! - `GET /search?q=<terms>`: JSON array of `{uri, score, verified_at}`.
//! - `GET /search?digest=<hex64>`: every indexed location of that digest.
//! - `GET /status`: crawl statistics.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde_json::json;

use super::{tokenize, SearchIndex};
use crate::digest::Digest;

pub type SharedIndex = Arc<RwLock<SearchIndex>>;

pub fn router(index: SharedIndex) -> Router {
    Router::new()
        .route("/search", get(search))
        .route("/status", get(status))
        .with_state(index)
}

async fn search(
    State(index): State<SharedIndex>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let index = index.read().unwrap_or_else(|e| e.into_inner());
    if let Some(digest) = params.get("digest") {
        return match Digest::parse_hex(digest) {
            Ok(d) => Json(index.lookup(&d)).into_response(),
            Err(e) => (
                StatusCode::BAD_REQUEST,
                Json(json!({ "error": e.to_string() })),
            )
                .into_response(),
        };
    }
    let terms = params.get("q").map(|q| tokenize(q)).unwrap_or_default();
    Json(index.query(&terms)).into_response()
}

async fn status(State(index): State<SharedIndex>) -> Response {
    let index = index.read().unwrap_or_else(|e| e.into_inner());
    Json(index.status()).into_response()
}
