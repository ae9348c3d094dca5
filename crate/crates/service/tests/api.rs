use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Method, Request, StatusCode};
use futures_util::{SinkExt, StreamExt};
use mdflow_core::fixtures;
use mdflow_core::io::ImporterRegistry;
use mdflow_core::nodes::Catalog;
use mdflow_service::{router, AppState, RunRequest};
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;
use tower::ServiceExt;

fn app() -> Arc<AppState> {
    AppState::new(Catalog::builtin(), ImporterRegistry::with_builtin())
}

async fn call(app: &Arc<AppState>, method: Method, uri: &str, body: Option<String>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or(Body::empty(), Body::from))
        .unwrap();
    let res = router(Arc::clone(app)).oneshot(req).await.unwrap();
    let status = res.status();
    (status, to_bytes(res.into_body(), usize::MAX).await.unwrap().to_vec())
}

async fn call_json(app: &Arc<AppState>, method: Method, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn write_fixture(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

async fn open(app: &Arc<AppState>, path: &Path) -> String {
    let (status, body) = call_json(app, Method::POST, "/api/session", Some(json!({"trajectory": path}).to_string())).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn unknown_format_is_passed_through() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_fixture(dir.path(), "traj.qqq", "nothing");
    let app = app();
    let (status, body) = call_json(&app, Method::POST, "/api/session", Some(json!({"trajectory": path}).to_string())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "UnknownFormat");
    assert!(body["message"].is_string());
}

#[tokio::test]
async fn missing_session_is_404() {
    let app = app();
    let (status, body) = call_json(&app, Method::GET, "/api/session/nope/graph", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "SessionNotFound");
}

#[tokio::test]
async fn type_mismatch_identifies_the_connection() {
    let dir = tempfile::tempdir().unwrap();
    let app = app();
    let id = open(&app, &write_fixture(dir.path(), "h.ssv", &fixtures::hydrate_ssv())).await;
    let bad = json!({
        "nodes": [
            {"id": 1, "kind": "get_positions", "params": {}},
            {"id": 2, "kind": "group_list", "params": {}}
        ],
        "connections": [{"from": "1.positions", "to": "2.offsets"}]
    });
    let (status, body) = call_json(&app, Method::PUT, &format!("/api/session/{id}/graph"), Some(bad.to_string())).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    assert_eq!(body["code"], "TypeMismatch");
    assert_eq!(body["diagnostics"][0]["connection"], 0);
    assert!(body["message"].as_str().unwrap().contains("1.positions"), "{body}");

    // The rejected graph did not replace the stored one.
    let (_, stored) = call_json(&app, Method::GET, &format!("/api/session/{id}/graph"), None).await;
    assert_eq!(stored["nodes"], json!([]));
}

#[tokio::test]
async fn cyclic_graph_is_422() {
    let dir = tempfile::tempdir().unwrap();
    let app = app();
    let id = open(&app, &write_fixture(dir.path(), "h.ssv", &fixtures::hydrate_ssv())).await;
    let cyclic = json!({
        "nodes": [
            {"id": 1, "kind": "add", "params": {"dtype": "f64", "rank": 1}},
            {"id": 2, "kind": "add", "params": {"dtype": "f64", "rank": 1}}
        ],
        "connections": [
            {"from": "1.out", "to": "2.a"},
            {"from": "2.out", "to": "1.a"}
        ]
    });
    let (status, body) = call_json(&app, Method::PUT, &format!("/api/session/{id}/graph"), Some(cyclic.to_string())).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "CycleDetected");
}

#[tokio::test]
async fn run_then_fetch_scene_attribute_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let app = app();
    let id = open(&app, &write_fixture(dir.path(), "h.ssv", &fixtures::hydrate_ssv())).await;
    let (status, body) = call_json(&app, Method::PUT, &format!("/api/session/{id}/graph"), Some(fixtures::HYDRATE_GRAPH.into())).await;
    assert_eq!(status, StatusCode::OK, "{body}");

    let (status, body) = call_json(&app, Method::POST, &format!("/api/session/{id}/run"), Some(json!({"wait": true}).to_string())).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["report"]["frames"].as_array().unwrap().len(), fixtures::HYDRATE_FRAMES);

    let (status, scene) = call_json(&app, Method::GET, &format!("/api/session/{id}/frame/0/scene"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(scene["frame"], 0);
    assert_eq!(scene["has_delta"], true);
    assert_eq!(scene["atoms"].as_array().unwrap().len(), 2 * fixtures::CAGE_ATOMS);

    let (status, attr) = call_json(&app, Method::GET, &format!("/api/session/{id}/attr/mcg/12"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(attr["values"].as_array().unwrap().len(), 2 * fixtures::CAGE_ATOMS);
    let (status, missing) = call_json(&app, Method::GET, &format!("/api/session/{id}/attr/nope/0"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(missing["frame"], 0);

    let (status, plot) = call_json(&app, Method::GET, &format!("/api/session/{id}/plot/mcg"), None).await;
    assert_eq!(status, StatusCode::OK);
    let ys: Vec<f64> = plot["points"].as_array().unwrap().iter().map(|p| p[1].as_f64().unwrap()).collect();
    assert_eq!(ys, fixtures::hydrate_expected_mcg());

    let (status, csv) = call(&app, Method::GET, &format!("/api/session/{id}/plot/mcg?format=csv"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), fixtures::HYDRATE_FRAMES + 1);

    let (_, info) = call_json(&app, Method::GET, &format!("/api/session/{id}"), None).await;
    assert_eq!(info["status"]["state"], "idle");
    assert_eq!(info["frames"], fixtures::HYDRATE_FRAMES);
}

#[tokio::test]
async fn active_run_blocks_runs_and_edits() {
    let dir = tempfile::tempdir().unwrap();
    let app = app();
    let id = open(&app, &write_fixture(dir.path(), "h.ssv", &fixtures::hydrate_ssv())).await;
    call_json(&app, Method::PUT, &format!("/api/session/{id}/graph"), Some(fixtures::HYDRATE_GRAPH.into())).await;

    // Claim the session directly so the run is active for as long as we need.
    let session = app.session(&id).unwrap();
    let (run_id, graph, opts, cache) = session.begin_run(&RunRequest::default(), &app.catalog).unwrap();

    let (status, body) = call_json(&app, Method::POST, &format!("/api/session/{id}/run"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "RunInProgress");
    let (status, _) = call_json(&app, Method::PUT, &format!("/api/session/{id}/graph"), Some(fixtures::HYDRATE_GRAPH.into())).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (_, info) = call_json(&app, Method::GET, &format!("/api/session/{id}"), None).await;
    assert_eq!(info["status"]["state"], "running");

    tokio::task::spawn_blocking(move || session.execute(run_id, graph, opts, cache, None))
        .await
        .unwrap()
        .unwrap();
    let (status, _) = call_json(&app, Method::POST, &format!("/api/session/{id}/run"), Some(json!({"wait": true}).to_string())).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn bad_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let app = app();
    let id = open(&app, &write_fixture(dir.path(), "h.ssv", &fixtures::hydrate_ssv())).await;
    call_json(&app, Method::PUT, &format!("/api/session/{id}/graph"), Some(fixtures::HYDRATE_GRAPH.into())).await;
    let (status, body) = call_json(&app, Method::POST, &format!("/api/session/{id}/run"), Some(json!({"frames": "0:500"}).to_string())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    assert_eq!(body["code"], "RangeOutOfBounds");
}

#[tokio::test]
async fn nodes_lists_the_catalog() {
    let (status, body) = call_json(&app(), Method::GET, "/api/nodes", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body.to_string().contains("find_links"));
}

type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn live_server(app: &Arc<AppState>) -> std::net::SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let r = router(Arc::clone(app));
    tokio::spawn(async move { axum::serve(listener, r).await.unwrap() });
    addr
}

async fn connect(addr: std::net::SocketAddr, id: &str) -> Socket {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/api/session/{id}/events")).await.unwrap();
    ws
}

/// Reads events until `run_finished`.
async fn collect_run(ws: &mut Socket) -> Vec<Value> {
    let mut out = Vec::new();
    while let Some(msg) = tokio::time::timeout(std::time::Duration::from_secs(30), ws.next()).await.unwrap() {
        if let Message::Text(t) = msg.unwrap() {
            let v: Value = serde_json::from_str(&t).unwrap();
            let done = v["event"] == "run_finished";
            out.push(v);
            if done {
                break;
            }
        }
    }
    out
}

fn frame_done(events: &[Value]) -> Vec<u64> {
    events.iter().filter(|e| e["event"] == "frame_done").map(|e| e["frame"].as_u64().unwrap()).collect()
}

#[tokio::test]
async fn event_stream_orders_frames_and_answers_scrub() {
    let dir = tempfile::tempdir().unwrap();
    let app = app();
    let id = open(&app, &write_fixture(dir.path(), "h.ssv", &fixtures::hydrate_ssv())).await;
    call_json(&app, Method::PUT, &format!("/api/session/{id}/graph"), Some(fixtures::HYDRATE_GRAPH.into())).await;
    let addr = live_server(&app).await;
    let mut ws = connect(addr, &id).await;

    let session = app.session(&id).unwrap();
    let forward = RunRequest {
        frames: Some("0:10".into()),
        wait: true,
        ..RunRequest::default()
    };
    app.launch(Arc::clone(&session), forward).await.unwrap();
    let events = collect_run(&mut ws).await;
    assert_eq!(events[0]["event"], "run_started");
    assert_eq!(frame_done(&events), (0..10).collect::<Vec<_>>());
    // The mcg plot scalar rides along with each frame.
    assert!(events[1]["plots"].to_string().contains("mcg"), "{}", events[1]);

    let backward = RunRequest {
        frames: Some("0:10".into()),
        direction: Some(mdflow_core::graph::Direction::Backward),
        wait: true,
        ..RunRequest::default()
    };
    app.launch(Arc::clone(&session), backward).await.unwrap();
    let events = collect_run(&mut ws).await;
    assert_eq!(frame_done(&events), (0..10).rev().collect::<Vec<_>>());

    ws.send(Message::Text(json!({"type": "scrub", "frame": 4}).to_string().into())).await.unwrap();
    let reply = ws.next().await.unwrap().unwrap();
    let reply: Value = serde_json::from_str(reply.to_text().unwrap()).unwrap();
    assert_eq!(reply["event"], "scene_ready");
    assert_eq!(reply["frame"], 4);

    ws.send(Message::Text("{\"type\":\"dance\"}".into())).await.unwrap();
    let reply: Value = serde_json::from_str(ws.next().await.unwrap().unwrap().to_text().unwrap()).unwrap();
    assert_eq!(reply["code"], "BadMessage");

    // Closing the channel does not affect later runs.
    ws.close(None).await.unwrap();
    let (status, _) = call_json(&app, Method::POST, &format!("/api/session/{id}/run"), Some(json!({"wait": true}).to_string())).await;
    assert_eq!(status, StatusCode::OK);
}

const FAIL_SCRIPT: &str = "# @av in a : f64 [1]\n# @av out out : f64 [1]\n";

fn failing_graph(script: &Path) -> String {
    json!({
        "nodes": [
            {"id": 1, "kind": "const", "params": {"value": [1.0, 2.0]}},
            {"id": 2, "kind": {"script": {"path": script, "language": "python", "command": "loopback:fail"}}, "params": {}},
            {"id": 3, "kind": "set_attribute", "params": {"name": "x"}}
        ],
        "connections": [
            {"from": "1.value", "to": "2.a"},
            {"from": "2.out", "to": "3.values"}
        ]
    })
    .to_string()
}

#[tokio::test]
async fn node_errors_are_streamed_and_runs_continue() {
    let dir = tempfile::tempdir().unwrap();
    let app = app();
    let id = open(&app, &write_fixture(dir.path(), "c.ssv", &fixtures::cluster_ssv())).await;
    let script = write_fixture(dir.path(), "fail.py", FAIL_SCRIPT);
    let (status, body) = call_json(&app, Method::PUT, &format!("/api/session/{id}/graph"), Some(failing_graph(&script))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let addr = live_server(&app).await;
    let mut ws = connect(addr, &id).await;

    let (status, body) = call_json(
        &app,
        Method::POST,
        &format!("/api/session/{id}/run"),
        Some(json!({"frames": "0:5", "continue_on_error": true}).to_string()),
    )
    .await;
    assert_eq!(status, StatusCode::ACCEPTED);
    assert!(body["run_id"].is_u64());
    let events = collect_run(&mut ws).await;
    assert_eq!(frame_done(&events), vec![0, 1, 2, 3, 4]);
    let errors: Vec<&Value> = events.iter().filter(|e| e["event"] == "node_error").collect();
    assert_eq!(errors.len(), 5);
    assert_eq!(errors[3]["node"], 2);
    assert_eq!(errors[3]["frame"], 3);
    assert!(errors[3]["message"].as_str().unwrap().contains("line 7"));

    assert_eq!(settled_state(&app, &id).await, "error");

    // Without continue-on-error the run halts at the first failure.
    let (status, _) = call_json(&app, Method::POST, &format!("/api/session/{id}/run"), Some(json!({"frames": "0:5"}).to_string())).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let events = collect_run(&mut ws).await;
    assert_eq!(frame_done(&events), vec![0]);
    assert_eq!(settled_state(&app, &id).await, "error");
}

/// Session state once the worker has released the run.
async fn settled_state(app: &Arc<AppState>, id: &str) -> String {
    for _ in 0..500 {
        let (_, info) = call_json(app, Method::GET, &format!("/api/session/{id}"), None).await;
        if info["status"]["state"] != "running" {
            return info["status"]["state"].as_str().unwrap().to_string();
        }
        tokio::time::sleep(std::time::Duration::from_millis(10)).await;
    }
    panic!("run never settled");
}

#[tokio::test]
async fn stop_on_idle_session_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let app = app();
    let id = open(&app, &write_fixture(dir.path(), "h.ssv", &fixtures::hydrate_ssv())).await;
    let (status, body) = call_json(&app, Method::POST, &format!("/api/session/{id}/stop"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["stopping"], false);
}
