//! Running axum routers on TCP listeners.

use std::io;
use std::net::SocketAddr;

use axum::Router;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

/// A service running in the background of the current tokio runtime.
/// Dropping the handle shuts the service down.
#[derive(Debug)]
pub struct ServiceHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    task: Option<JoinHandle<io::Result<()>>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// `host:port` as it appears in URIs pointing at this service.
    pub fn authority(&self) -> String {
        self.addr.to_string()
    }

    /// `http://host:port/`.
    pub fn base_url(&self) -> String {
        format!("http://{}/", self.addr)
    }

    pub async fn shutdown(mut self) -> io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.task.take() {
            Some(task) => task.await.map_err(io::Error::other)?,
            None => Ok(()),
        }
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

/// Binds `addr` (port 0 picks an ephemeral port) and serves `router` in a
/// background task.
pub async fn spawn(addr: &str, router: Router) -> io::Result<ServiceHandle> {
    let listener = TcpListener::bind(addr).await?;
    spawn_on(listener, router)
}

pub fn spawn_on(listener: TcpListener, router: Router) -> io::Result<ServiceHandle> {
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        axum::serve(listener, router)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(ServiceHandle {
        addr,
        shutdown: Some(tx),
        task: Some(task),
    })
}

/// Serves `router` on `listener` until the process is interrupted.
pub async fn serve_forever(listener: TcpListener, router: Router) -> io::Result<()> {
    axum::serve(listener, router)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
