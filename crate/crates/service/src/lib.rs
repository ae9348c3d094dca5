//! HTTP and WebSocket front end for the analysis engine.
//!
//! ```text
//! POST /api/session                        {"trajectory": path}
//! GET  /api/session/{id}
//! GET  /api/session/{id}/graph
//! PUT  /api/session/{id}/graph             graph JSON; 422 with diagnostics
//! POST /api/session/{id}/run               RunRequest; 409 while running
//! POST /api/session/{id}/stop
//! GET  /api/session/{id}/frame/{k}/scene   SceneSnapshot
//! GET  /api/session/{id}/attr/{name}/{k}
//! GET  /api/session/{id}/plot/{node}       JSON, or CSV with ?format=csv
//! GET  /api/session/{id}/events            WebSocket
//! GET  /api/nodes                          node catalog
//! ```
//!
//! Errors are `{code, message, node?, frame?}` bodies. Sessions live in
//! memory for the lifetime of the process.

mod error;
mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mdflow_core::graph::GraphDocument;
use mdflow_core::io::{ImportError, ImporterRegistry};
use mdflow_core::nodes::Catalog;
use serde::Deserialize;
use serde_json::{json, Value};

pub use error::ApiError;
pub use session::{run_options, RunRequest, RunResult, Session, SessionStatus};

pub const DEFAULT_PORT: u16 = 8765;

pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    next_id: AtomicU64,
    pub catalog: Arc<Catalog>,
    pub registry: Arc<ImporterRegistry>,
}

impl AppState {
    pub fn new(catalog: Catalog, registry: ImporterRegistry) -> Arc<Self> {
        Arc::new(Self {
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            catalog: Arc::new(catalog),
            registry: Arc::new(registry),
        })
    }

    pub fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("SessionNotFound", format!("no session `{id}`")))
    }

    pub fn open_session(&self, path: &std::path::Path) -> Result<Arc<Session>, ApiError> {
        let traj = self.registry.open(path).map_err(|e| {
            let code = match e {
                ImportError::UnknownFormat(_) => "UnknownFormat",
                ImportError::SourceRead(_) => "SourceRead",
                _ => "ImportError",
            };
            ApiError::bad_request(code, e.to_string())
        })?;
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::SeqCst));
        let session = Arc::new(Session::new(id.clone(), traj));
        self.sessions
            .write()
            .expect("session table poisoned")
            .insert(id, Arc::clone(&session));
        Ok(session)
    }

    /// Requests cancellation of every active run.
    pub fn stop_all(&self) {
        for s in self.sessions.read().expect("session table poisoned").values() {
            s.stop();
        }
    }

    /// Claims a run and executes it on a blocking worker.
    pub async fn launch(&self, session: Arc<Session>, req: RunRequest) -> Result<Response, ApiError> {
        let (run_id, graph, opts, cache) = session.begin_run(&req, &self.catalog)?;
        let out_dir = req.out_dir.clone();
        let worker = {
            let session = Arc::clone(&session);
            tokio::task::spawn_blocking(move || session.execute(run_id, graph, opts, cache, out_dir))
        };
        if req.wait {
            let result = worker.await.map_err(|e| ApiError::internal(e.to_string()))??;
            Ok(Json(result).into_response())
        } else {
            tokio::spawn(async move {
                if let Ok(Err(e)) = worker.await {
                    log::warn!("run {run_id} failed: {}", e.message);
                }
            });
            Ok((StatusCode::ACCEPTED, Json(json!({"run_id": run_id}))).into_response())
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/nodes", get(nodes))
        .route("/api/session", post(create_session))
        .route("/api/session/{id}", get(session_info))
        .route("/api/session/{id}/graph", get(get_graph).put(put_graph))
        .route("/api/session/{id}/run", post(run))
        .route("/api/session/{id}/stop", post(stop))
        .route("/api/session/{id}/frame/{k}/scene", get(scene))
        .route("/api/session/{id}/attr/{name}/{k}", get(attr))
        .route("/api/session/{id}/plot/{node}", get(plot))
        .route("/api/session/{id}/events", get(events))
        .with_state(state)
}

/// Binds `addr` and serves until `shutdown` resolves, then stops active runs.
pub async fn serve(
    state: Arc<AppState>,
    addr: SocketAddr,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_on(state, listener, shutdown).await
}

/// Serves on an already bound listener.
pub async fn serve_on(
    state: Arc<AppState>,
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    log::info!("listening on http://{}", listener.local_addr()?);
    let app = router(Arc::clone(&state));
    axum::serve(listener, app)
        .with_graceful_shutdown(async move {
            shutdown.await;
            state.stop_all();
        })
        .await
}

type Shared = State<Arc<AppState>>;

async fn nodes(State(app): Shared) -> Json<Value> {
    Json(json!(app.catalog.kinds()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    trajectory: PathBuf,
}

fn session_json(s: &Session) -> Value {
    json!({
        "id": s.id,
        "trajectory": s.trajectory.label(),
        "format": s.trajectory.format_name(),
        "frames": s.trajectory.frame_count(),
        "atoms": s.trajectory.atom_count(),
        "status": s.status(),
    })
}

async fn create_session(State(app): Shared, body: Result<Json<CreateSession>, axum::extract::rejection::JsonRejection>) -> Result<Response, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::bad_request("BadRequest", e.body_text()))?;
    let app2 = Arc::clone(&app);
    let session = tokio::task::spawn_blocking(move || app2.open_session(&req.trajectory))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(session_json(&session))).into_response())
}

async fn session_info(State(app): Shared, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let session = app.session(&id)?;
    Ok(Json(session_json(&session)))
}

async fn get_graph(State(app): Shared, Path(id): Path<String>) -> Result<Json<GraphDocument>, ApiError> {
    Ok(Json(app.session(&id)?.graph()))
}

async fn put_graph(State(app): Shared, Path(id): Path<String>, body: String) -> Result<Json<Value>, ApiError> {
    let session = app.session(&id)?;
    let doc = GraphDocument::from_json(&body).map_err(|e| {
        let mut err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "BadDocument", e.to_string());
        err.message = e.to_string();
        err
    })?;
    let warnings = session.set_graph(doc, &app.catalog)?;
    Ok(Json(json!({"ok": true, "diagnostics": warnings})))
}

async fn run(State(app): Shared, Path(id): Path<String>, body: String) -> Result<Response, ApiError> {
    let session = app.session(&id)?;
    let req: RunRequest = if body.trim().is_empty() {
        RunRequest::default()
    } else {
        serde_json::from_str(&body).map_err(|e| ApiError::bad_request("BadRequest", e.to_string()))?
    };
    app.launch(session, req).await
}

async fn stop(State(app): Shared, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    Ok(Json(json!({"stopping": app.session(&id)?.stop()})))
}

async fn scene(State(app): Shared, Path((id, k)): Path<(String, usize)>) -> Result<Response, ApiError> {
    let session = app.session(&id)?;
    let snap = tokio::task::spawn_blocking(move || session.scene(k))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(([(header::CONTENT_TYPE, "application/json")], snap.to_json()).into_response())
}

async fn attr(State(app): Shared, Path((id, name, k)): Path<(String, String, usize)>) -> Result<Json<Value>, ApiError> {
    let values = app.session(&id)?.attribute(&name, k).ok_or_else(|| {
        let mut e = ApiError::not_found("AttributeNotFound", format!("attribute `{name}` is not defined at frame {k}"));
        e.frame = Some(k);
        e
    })?;
    Ok(Json(json!({"name": name, "frame": k, "values": values})))
}

#[derive(Deserialize)]
struct PlotQuery {
    format: Option<String>,
}

async fn plot(
    State(app): Shared,
    Path((id, node)): Path<(String, String)>,
    Query(q): Query<PlotQuery>,
) -> Result<Response, ApiError> {
    let series = app
        .session(&id)?
        .plot(&node)
        .ok_or_else(|| ApiError::not_found("PlotNotFound", format!("no plot series `{node}`")))?;
    Ok(match q.format.as_deref() {
        Some("csv") => ([(header::CONTENT_TYPE, "text/csv")], series.to_csv()).into_response(),
        None | Some("json") => Json(series).into_response(),
        Some(other) => return Err(ApiError::bad_request("BadRequest", format!("unknown format `{other}`"))),
    })
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ClientMessage {
    Scrub { frame: usize },
}

async fn events(State(app): Shared, Path(id): Path<String>, ws: WebSocketUpgrade) -> Result<Response, ApiError> {
    let session = app.session(&id)?;
    // Subscribe before the handshake completes so no event is missed.
    let rx = session.subscribe();
    Ok(ws.on_upgrade(move |socket| pump(socket, session, rx)))
}

/// Forwards run events and answers scrub requests until either side closes.
async fn pump(mut socket: WebSocket, session: Arc<Session>, mut rx: tokio::sync::broadcast::Receiver<String>) {
    loop {
        tokio::select! {
            ev = rx.recv() => match ev {
                Ok(text) => {
                    if socket.send(Message::Text(text.into())).await.is_err() {
                        return;
                    }
                }
                Err(tokio::sync::broadcast::error::RecvError::Lagged(n)) => {
                    let notice = json!({"event": "lagged", "missed": n}).to_string();
                    if socket.send(Message::Text(notice.into())).await.is_err() {
                        return;
                    }
                }
                Err(_) => return,
            },
            msg = socket.recv() => match msg {
                Some(Ok(Message::Text(text))) => {
                    let reply = match serde_json::from_str::<ClientMessage>(&text) {
                        Ok(ClientMessage::Scrub { frame }) => {
                            let s = Arc::clone(&session);
                            match tokio::task::spawn_blocking(move || s.scene(frame)).await {
                                Ok(Ok(snap)) => json!({"event": "scene_ready", "frame": frame, "has_delta": snap.has_delta}),
                                Ok(Err(e)) => json!({"event": "error", "code": e.code, "message": e.message, "frame": frame}),
                                Err(e) => json!({"event": "error", "code": "Internal", "message": e.to_string()}),
                            }
                        }
                        Err(e) => json!({"event": "error", "code": "BadMessage", "message": e.to_string()}),
                    };
                    if socket.send(Message::Text(reply.to_string().into())).await.is_err() {
                        return;
                    }
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}
