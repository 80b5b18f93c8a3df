//! JSON over HTTP. Rejections use 422 (409 for a stale snapshot) with the
//! same body shape as an acceptance, so clients can parse either way.

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use multiballot_core::board::Envelope;
use multiballot_core::group::Group;
use multiballot_core::ids::{CollectionId, VoterId};
use serde::Deserialize;
use tokio::sync::oneshot;

use crate::service::{BoardService, ReadError, SubmitResponse};

type Svc<G> = Arc<BoardService<G>>;

pub fn router<G: Group>(svc: Svc<G>) -> Router {
    Router::new()
        .route("/submit", post(submit::<G>))
        .route("/snapshot", get(snapshot::<G>))
        .route("/chain/{collection}/{voter}", get(chain::<G>))
        .route("/events", get(events::<G>))
        .route("/health", get(health::<G>))
        .with_state(svc)
}

fn internal(e: impl std::fmt::Display) -> Response {
    let body = ReadError {
        code: "UNAVAILABLE".into(),
        message: e.to_string(),
    };
    (StatusCode::SERVICE_UNAVAILABLE, Json(body)).into_response()
}

async fn submit<G: Group>(State(svc): State<Svc<G>>, body: String) -> Response {
    let head = svc.health().head;
    let envelope: Envelope = match serde_json::from_str(&body) {
        Ok(e) => e,
        Err(e) => {
            let r = SubmitResponse::Rejected {
                code: "MALFORMED".into(),
                message: format!("envelope does not parse: {e}"),
                head,
            };
            return (StatusCode::UNPROCESSABLE_ENTITY, Json(r)).into_response();
        }
    };
    let r = tokio::task::spawn_blocking(move || svc.submit(&envelope)).await;
    match r {
        Ok(Ok(resp)) => {
            let status = match resp.code() {
                None => StatusCode::OK,
                Some("STALE_SNAPSHOT") => StatusCode::CONFLICT,
                Some(_) => StatusCode::UNPROCESSABLE_ENTITY,
            };
            (status, Json(resp)).into_response()
        }
        Ok(Err(e)) => internal(e),
        Err(e) => internal(e),
    }
}

async fn snapshot<G: Group>(State(svc): State<Svc<G>>) -> Response {
    match tokio::task::spawn_blocking(move || serde_json::to_vec(&svc.snapshot())).await {
        Ok(Ok(body)) => ([("content-type", "application/json")], body).into_response(),
        Ok(Err(e)) => internal(e),
        Err(e) => internal(e),
    }
}

async fn chain<G: Group>(State(svc): State<Svc<G>>, Path((collection, voter)): Path<(String, String)>) -> Response {
    match svc.chain(&CollectionId::new(collection), &VoterId::new(voter)) {
        Ok(doc) => Json(doc).into_response(),
        Err(e) => (StatusCode::NOT_FOUND, Json(e)).into_response(),
    }
}

#[derive(Deserialize)]
struct EventsQuery {
    #[serde(default)]
    from: u64,
    #[serde(default)]
    wait_ms: u64,
}

async fn events<G: Group>(State(svc): State<Svc<G>>, Query(q): Query<EventsQuery>) -> Response {
    let r = tokio::task::spawn_blocking(move || svc.events(q.from, Duration::from_millis(q.wait_ms))).await;
    match r {
        Ok(page) => Json(page).into_response(),
        Err(e) => internal(e),
    }
}

async fn health<G: Group>(State(svc): State<Svc<G>>) -> Response {
    Json(svc.health()).into_response()
}

/// Serves until the future resolves or ctrl-c.
pub async fn serve<G: Group>(svc: Svc<G>, addr: SocketAddr) -> std::io::Result<()> {
    serve_on(svc, tokio::net::TcpListener::bind(addr).await?).await
}

pub async fn serve_on<G: Group>(svc: Svc<G>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(svc))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// A server on its own runtime thread, stopped on drop.
pub struct ServerHandle {
    pub addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

pub fn spawn<G: Group>(svc: Svc<G>, addr: SocketAddr) -> std::io::Result<ServerHandle> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind(addr))?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        rt.block_on(async move {
            let _ = axum::serve(listener, router(svc))
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
    });
    Ok(ServerHandle {
        addr,
        stop: Some(tx),
        thread: Some(thread),
    })
}
