use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::{Path, State};
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::get;
use trusty_core::fetch::{Fetch, HttpFetcher};
use trusty_core::search::client::SearchClient;
use trusty_core::search::http::router as search_router;
use trusty_core::search::{CrawlError, Crawler, SearchIndex};
use trusty_core::service::{spawn, spawn_on, ServiceHandle};
use trusty_core::store::http::router as store_router;
use trusty_core::{Digest, ParentSpec, Resource, Store, TrustyUri, VerificationOutcome};

struct Site {
    _dir: tempfile::TempDir,
    store: Arc<Store>,
    _handle: ServiceHandle,
}

async fn site() -> Site {
    let dir = tempfile::tempdir().unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}/", listener.local_addr().unwrap());
    let store = Arc::new(Store::open(dir.path(), &base).unwrap());
    let handle = spawn_on(listener, store_router(store.clone())).unwrap();
    Site {
        _dir: dir,
        store,
        _handle: handle,
    }
}

fn publish(store: &Store, html: String) -> TrustyUri {
    store
        .publish(trusty_core::store::PublishRequest::new(
            Resource::html(html),
            "site",
            ParentSpec::Auto,
        ))
        .unwrap()
        .record
        .uri
}

/// Serves another store's objects with the first octet flipped while `on`.
async fn tampering_mirror(store: Arc<Store>, on: Arc<AtomicBool>) -> ServiceHandle {
    async fn get_object(
        State((store, on)): State<(Arc<Store>, Arc<AtomicBool>)>,
        Path(hex): Path<String>,
    ) -> axum::response::Response {
        let digest = Digest::parse_hex(&hex).unwrap();
        let (resource, _) = store.fetch(&digest).unwrap();
        let media_type = resource.media_type().to_string();
        let mut body = resource.into_content();
        if on.load(Ordering::SeqCst) {
            body[0] ^= 1;
        }
        ([(header::CONTENT_TYPE, media_type)], body).into_response()
    }
    let router = axum::Router::new()
        .route("/{digest}", get(get_object))
        .with_state((store, on));
    spawn("127.0.0.1:0", router).await.unwrap()
}

#[tokio::test]
async fn crawl_published_graph_and_query_over_http() {
    let site = site().await;
    let b = publish(&site.store, "<p>bravo shared</p>".into());
    let c = publish(&site.store, "<p>charlie shared</p>".into());
    let a = publish(
        &site.store,
        format!(r#"<p>alpha</p><a href="{b}">1</a><a href="{c}">2</a><a href="https://plain.example/x">3</a>"#),
    );

    let index = Arc::new(RwLock::new(SearchIndex::new()));
    let report = Crawler::new(HttpFetcher::default())
        .crawl(&index, std::slice::from_ref(&a), 10)
        .await
        .unwrap();
    assert_eq!(report.indexed, 3);
    assert!(report.rejected.is_empty());

    // Soundness: every entry re-verifies against what the host serves now.
    let entries: Vec<TrustyUri> = index.read().unwrap().entries().iter().map(|e| e.uri.clone()).collect();
    for uri in entries {
        let fresh = HttpFetcher::default().fetch(&uri).await.unwrap();
        assert_eq!(uri.verify(fresh.content()), VerificationOutcome::Match);
    }

    let handle = spawn("127.0.0.1:0", search_router(index.clone())).await.unwrap();
    let client = SearchClient::new(&handle.base_url()).unwrap();
    let hits = client.search(&["alpha"]).await.unwrap();
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].uri, a);
    assert_eq!(client.search(&["shared"]).await.unwrap().len(), 2);
    assert!(client.search(&["absent"]).await.unwrap().is_empty());
    assert_eq!(client.lookup(b.digest()).await.unwrap()[0].uri, b);
    let status = client.status().await.unwrap();
    assert_eq!(status.entries, 3);
    assert_eq!(status.crawls, 1);
}

#[tokio::test]
async fn tampered_host_is_rejected_and_links_unfollowed() {
    let site = site().await;
    let leaf = publish(&site.store, "<p>leaf</p>".into());
    let middle = publish(&site.store, format!(r#"<p>middle</p><a href="{leaf}">x</a>"#));
    let on = Arc::new(AtomicBool::new(true));
    let mirror = tampering_mirror(site.store.clone(), on.clone()).await;
    let middle_on_mirror = middle.with_authority(&mirror.authority()).unwrap();
    let root = publish(
        &site.store,
        format!(r#"<p>root</p><a href="{middle_on_mirror}">m</a>"#),
    );

    let index = RwLock::new(SearchIndex::new());
    let report = Crawler::new(HttpFetcher::default())
        .crawl(&index, &[root], 10)
        .await
        .unwrap();
    assert_eq!(report.indexed, 1);
    assert_eq!(report.rejected.len(), 1);
    assert_eq!(report.rejected[0].uri, middle_on_mirror);
    assert_ne!(report.rejected[0].actual, report.rejected[0].expected);
    let index = index.read().unwrap();
    assert!(index.get(&middle_on_mirror).is_none());
    assert!(index.get(&leaf).is_none());
    assert_eq!(index.status().rejected_total, 1);
}

#[tokio::test]
async fn budget_and_unreachable_seeds() {
    let site = site().await;
    let b = publish(&site.store, "<p>b</p>".into());
    let c = publish(&site.store, "<p>c</p>".into());
    let a = publish(&site.store, format!(r#"<a href="{b}">b</a><a href="{c}">c</a>"#));
    let index = RwLock::new(SearchIndex::new());
    let report = Crawler::new(HttpFetcher::default())
        .crawl(&index, &[a], 1)
        .await
        .unwrap();
    assert_eq!(report.indexed, 1);
    // Closure: links are either indexed, rejected, or pending.
    assert_eq!(report.pending.len(), 2);

    let dead = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap()
    };
    let ghost = trusty_core::mint(&format!("http://{dead}/"), b"ghost").unwrap();
    let empty = RwLock::new(SearchIndex::new());
    assert_eq!(
        Crawler::new(HttpFetcher::default()).crawl(&empty, &[ghost], 5).await,
        Err(CrawlError::CrawlEmpty(1))
    );
}

#[tokio::test]
async fn index_persists_across_restarts() {
    let site = site().await;
    let a = publish(&site.store, "<p>persisted words</p>".into());
    let dir = tempfile::tempdir().unwrap();
    {
        let index = RwLock::new(SearchIndex::open(dir.path()).unwrap());
        Crawler::new(HttpFetcher::default())
            .crawl(&index, std::slice::from_ref(&a), 3)
            .await
            .unwrap();
        index.read().unwrap().save().unwrap();
    }
    let index = SearchIndex::open(dir.path()).unwrap();
    assert_eq!(index.query(&["persisted"])[0].uri, a);
    assert_eq!(index.status().crawls, 1);
}
