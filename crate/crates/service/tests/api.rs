mod support;

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::State;
use axum::http::HeaderMap;
use axum::routing::post;
use axum::{Json, Router};
use netplan_core::report::{GenerationRequest, TextGenerator};
use netplan_service::llm::HttpGenerator;
use serde_json::{json, Value};
use support::{call, open, spawn_server, Reply, SMALL_CONFIG};

fn server() -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let base = spawn_server(open(dir.path()));
    (dir, base)
}

fn wait_done(base: &str, id: &str) -> Value {
    let start = Instant::now();
    loop {
        let run = call("GET", &format!("{base}/api/runs/{id}"), None).json();
        if run["state"] == "done" || run["state"] == "failed" {
            return run;
        }
        assert!(start.elapsed() < Duration::from_secs(60));
        std::thread::sleep(Duration::from_millis(20));
    }
}

fn solved(base: &str) -> String {
    let body = json!({ "config": serde_json::from_str::<Value>(SMALL_CONFIG).unwrap() }).to_string();
    let r = call("POST", &format!("{base}/api/runs"), Some(body.as_bytes()));
    assert_eq!(r.status, 202, "{}", String::from_utf8_lossy(&r.body));
    let id = r.json()["id"].as_str().unwrap().to_string();
    assert_eq!(wait_done(base, &id)["state"], "done");
    id
}

fn error_code(r: &Reply) -> String {
    r.json()["code"].as_str().unwrap().to_string()
}

#[test]
fn health_reports_version_and_queue() {
    let (_dir, base) = server();
    let r = call("GET", &format!("{base}/api/health"), None);
    assert_eq!(r.status, 200);
    let v = r.json();
    assert_eq!(v["status"], "ok");
    assert_eq!(v["queue_depth"], 0);
}

#[test]
fn config_put_then_get_is_byte_identical() {
    let (_dir, base) = server();
    let url = format!("{base}/api/config");
    let r = call("GET", &url, None);
    assert_eq!((r.status, error_code(&r).as_str()), (404, "no_config"));
    let raw = format!("{}\n", SMALL_CONFIG.replace("  ", "\t"));
    let put = call("PUT", &url, Some(raw.as_bytes()));
    assert_eq!(put.status, 200);
    assert_eq!(put.json()["version"], 1);
    let got = call("GET", &url, None);
    assert_eq!(got.body, raw.as_bytes());
    assert_eq!(got.header("x-config-version"), Some("1"));
    let bad = SMALL_CONFIG.replace("\"min_ship_qty\": 5", "\"min_ship_qty\": -5");
    let r = call("PUT", &url, Some(bad.as_bytes()));
    assert_eq!((r.status, error_code(&r).as_str()), (422, "invalid_config"));
    assert!(!r.json()["details"].as_array().unwrap().is_empty());
    assert_eq!(call("GET", &url, None).body, raw.as_bytes());
}

#[test]
fn runs_lifecycle_and_views() {
    let (_dir, base) = server();
    let id = solved(&base);
    let second = solved(&base);
    let list = call("GET", &format!("{base}/api/runs"), None).json();
    let ids: Vec<&str> = list.as_array().unwrap().iter().map(|r| r["id"].as_str().unwrap()).collect();
    assert_eq!(ids, vec![second.as_str(), id.as_str()]);

    let t = call("GET", &format!("{base}/api/runs/{id}/transfers"), None).json();
    let lanes = t["lanes"].as_array().unwrap();
    assert!(!lanes.is_empty());
    let lane_sum: f64 = lanes.iter().map(|l| l["total"].as_f64().unwrap()).sum();
    let weekly_sum: f64 = t["weekly_totals"].as_array().unwrap().iter().map(|w| w["qty"].as_f64().unwrap()).sum();
    assert!((lane_sum - weekly_sum).abs() < 1e-9);
    assert!((lane_sum - t["total"].as_f64().unwrap()).abs() < 1e-9);
    for l in lanes {
        let w: f64 = l["weekly"].as_array().unwrap().iter().map(|q| q["qty"].as_f64().unwrap()).sum();
        assert!((w - l["total"].as_f64().unwrap()).abs() < 1e-9);
    }

    let s = call("GET", &format!("{base}/api/runs/{id}/series/A"), None);
    assert_eq!(s.status, 200);
    let s = s.json();
    assert_eq!(s["site"], "A");
    assert_eq!(s["inventory"].as_array().unwrap().len(), 4);
    assert_eq!(s["weeks"].as_array().unwrap().len(), 4);
    let r = call("GET", &format!("{base}/api/runs/{id}/series/Z"), None);
    assert_eq!(r.status, 404);

    let k = call("GET", &format!("{base}/api/runs/{id}/kpis?level=region"), None).json();
    let groups: Vec<&str> = k["groups"].as_array().unwrap().iter().map(|g| g["group"].as_str().unwrap()).collect();
    assert_eq!(groups, vec!["North", "South"]);
    let r = call("GET", &format!("{base}/api/runs/{id}/kpis?level=planet"), None);
    assert_eq!(r.status, 422);
}

#[test]
fn unknown_run_is_not_found() {
    let (_dir, base) = server();
    for path in ["", "/transfers", "/series/A", "/kpis"] {
        let r = call("GET", &format!("{base}/api/runs/missing{path}"), None);
        assert_eq!((r.status, error_code(&r).as_str()), (404, "not_found"), "{path}");
    }
    let r = call("POST", &format!("{base}/api/runs/missing/report"), Some(br#"{"role":"analyst"}"#));
    assert_eq!(r.status, 404);
}

#[test]
fn submit_without_config_conflicts() {
    let (_dir, base) = server();
    let r = call("POST", &format!("{base}/api/runs"), Some(b""));
    assert_eq!((r.status, error_code(&r).as_str()), (409, "no_config"));
    let r = call("POST", &format!("{base}/api/runs"), Some(br#"{"bogus": 1}"#));
    assert_eq!(r.status, 422);
}

#[test]
fn report_endpoint_caches_identical_requests() {
    let (_dir, base) = server();
    let id = solved(&base);
    let url = format!("{base}/api/runs/{id}/report");
    let body = br#"{"role": "manager", "weeks": {"from": 2, "to": 4}}"#;
    let first = call("POST", &url, Some(body));
    assert_eq!(first.status, 200, "{}", String::from_utf8_lossy(&first.body));
    assert_eq!(first.header("x-cache"), Some("miss"));
    let second = call("POST", &url, Some(body));
    assert_eq!(second.header("x-cache"), Some("hit"));
    assert_eq!(first.body, second.body);
    let v = first.json();
    assert_eq!(v["sections"].as_array().unwrap().len(), 3);
    assert!(v["text"].as_str().unwrap().contains("Transfer Rationale"));
    let r = call("POST", &url, Some(br#"{"role": "intern"}"#));
    assert_eq!((r.status, error_code(&r).as_str()), (422, "unknown_role"));
    let r = call("POST", &url, Some(br#"{"role": "analyst", "sites": ["Z"]}"#));
    assert_eq!((r.status, error_code(&r).as_str()), (422, "invalid_request"));
}

type Seen = Arc<Mutex<Vec<(Option<String>, Value)>>>;

async fn fake_completion(State(seen): State<Seen>, headers: HeaderMap, Json(body): Json<Value>) -> Json<Value> {
    let auth = headers.get("authorization").map(|v| v.to_str().unwrap().to_string());
    let model = body["model"].as_str().unwrap_or_default().to_string();
    seen.lock().unwrap().push((auth, body));
    Json(json!({ "choices": [{ "message": { "role": "assistant", "content": format!("reply from {model}") } }] }))
}

#[test]
fn http_generator_speaks_chat_completions() {
    let seen: Seen = Arc::default();
    let app = Router::new().route("/v1/chat/completions", post(fake_completion)).with_state(Arc::clone(&seen));
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        tokio::runtime::Runtime::new().unwrap().block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        })
    });
    let addr = rx.recv().unwrap();
    let gen =
        HttpGenerator::new(format!("http://{addr}/v1/chat/completions"), Some("k".into()), Duration::from_secs(5));
    let req = GenerationRequest { system: "sys".into(), context: "ctx".into(), data: "{}".into() };
    assert_eq!(gen.generate("writer", &req).unwrap(), "reply from writer");
    let (auth, body) = seen.lock().unwrap()[0].clone();
    assert_eq!(auth.as_deref(), Some("Bearer k"));
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][0]["content"], "sys");
    assert!(body["messages"][1]["content"].as_str().unwrap().starts_with("ctx"));

    let dead = HttpGenerator::new(format!("http://{addr}/missing"), None, Duration::from_secs(5));
    assert!(dead.generate("writer", &req).is_err());
}
