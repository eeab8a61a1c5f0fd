#![allow(dead_code)]

#[path = "../../../core/tests/common/mod.rs"]
pub mod common;

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use netplan_service::{RunRecord, Service};

pub use common::SMALL_CONFIG;

pub fn open(dir: &Path) -> Arc<Service> {
    Arc::new(Service::open(dir, None).unwrap())
}

/// Polls until the run is done or failed.
pub fn wait_terminal(svc: &Service, id: &str, timeout: Duration) -> RunRecord {
    let start = Instant::now();
    loop {
        let rec = svc.get_run(id).unwrap();
        if rec.state.is_terminal() {
            return rec;
        }
        assert!(start.elapsed() < timeout, "run {id} still {:?} after {timeout:?}", rec.state);
        std::thread::sleep(Duration::from_millis(20));
    }
}

/// Serves the API on an ephemeral port from a background runtime.
pub fn spawn_server(svc: Arc<Service>) -> String {
    let (tx, rx) = std::sync::mpsc::channel::<SocketAddr>();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, netplan_service::api::router(svc)).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

pub struct Reply {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap()
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }
}

pub fn call(method: &str, url: &str, body: Option<&[u8]>) -> Reply {
    let req = ureq::request(method, url);
    let res = match body {
        Some(b) => req.set("content-type", "application/json").send_bytes(b),
        None => req.call(),
    };
    let resp = match res {
        Ok(r) => r,
        Err(ureq::Error::Status(_, r)) => r,
        Err(e) => panic!("{method} {url}: {e}"),
    };
    let status = resp.status();
    let headers = resp
        .headers_names()
        .into_iter()
        .map(|k| {
            let v = resp.header(&k).unwrap_or_default().to_string();
            (k, v)
        })
        .collect();
    let mut body = Vec::new();
    std::io::Read::read_to_end(&mut resp.into_reader(), &mut body).unwrap();
    Reply { status, headers, body }
}
