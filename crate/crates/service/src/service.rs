//! Run lifecycle: submission, the single FIFO solver worker, progress
//! notes and the report cache.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{channel, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;

use netplan_core::config::{validate_json, ValidationReport};
use netplan_core::network::plan_network_with_progress;
use netplan_core::report::{
    ExternalSetup, NarrativeReport, ReportError, ReportPipeline, ReportRequest, Role, TextGenerator,
};
use netplan_core::solver::SolverOptions;
use serde::{Deserialize, Serialize};

use crate::store::{new_run_id, now_rfc3339, sha256_hex, JobState, RunRecord, Store, StoreError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressNote {
    pub item: String,
    pub nodes: u64,
    pub open_nodes: usize,
    pub incumbent: Option<f64>,
    pub best_bound: Option<f64>,
    pub gap: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("configuration is invalid")]
    InvalidConfig(ValidationReport),
    #[error("no active configuration")]
    NoConfig,
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("run {0} not found")]
    RunNotFound(String),
    #[error("run {0} has no plan yet")]
    NotReady(String),
    #[error(transparent)]
    Report(#[from] ReportError),
}

pub type External = (ExternalSetup, Box<dyn TextGenerator + Send + Sync>);

type CacheKey = (String, Role, String, String);

struct Inner {
    store: Store,
    progress: Mutex<HashMap<String, ProgressNote>>,
    reports: Mutex<HashMap<CacheKey, NarrativeReport>>,
    external: Option<External>,
    running: AtomicUsize,
    max_running: AtomicUsize,
    completed: AtomicUsize,
    paused: Mutex<bool>,
    resume: Condvar,
}

/// Owns the store and the solver worker. Dropping it lets the worker
/// finish the queued jobs and exit.
pub struct Service {
    inner: Arc<Inner>,
    tx: Mutex<Option<Sender<String>>>,
    worker: Mutex<Option<JoinHandle<()>>>,
}

impl Service {
    /// Opens `data_dir` and re-queues runs a previous process left unfinished.
    pub fn open(data_dir: impl Into<PathBuf>, external: Option<External>) -> Result<Self, ServiceError> {
        let store = Store::open(data_dir)?;
        let inner = Arc::new(Inner {
            store,
            progress: Mutex::new(HashMap::new()),
            reports: Mutex::new(HashMap::new()),
            external,
            running: AtomicUsize::new(0),
            max_running: AtomicUsize::new(0),
            completed: AtomicUsize::new(0),
            paused: Mutex::new(false),
            resume: Condvar::new(),
        });
        let (tx, rx) = channel::<String>();
        let worker_inner = Arc::clone(&inner);
        let worker = std::thread::Builder::new()
            .name("solver".into())
            .spawn(move || {
                for id in rx {
                    worker_inner.wait_while_paused();
                    if let Err(e) = worker_inner.execute(&id) {
                        tracing::error!("run {id}: {e}");
                    }
                }
            })
            .map_err(StoreError::Io)?;
        let svc = Service { inner, tx: Mutex::new(Some(tx)), worker: Mutex::new(Some(worker)) };
        for mut rec in svc.inner.store.unfinished()? {
            if rec.state == JobState::Running {
                rec.state = JobState::Queued;
                rec.started_at = None;
                rec.note = Some("re-queued after restart".into());
                svc.inner.store.put_run(&rec)?;
            }
            svc.enqueue(rec.id);
        }
        Ok(svc)
    }

    pub fn store(&self) -> &Store {
        &self.inner.store
    }

    pub fn has_external(&self) -> bool {
        self.inner.external.is_some()
    }

    fn enqueue(&self, id: String) {
        if let Some(tx) = self.tx.lock().unwrap().as_ref() {
            let _ = tx.send(id);
        }
    }

    /// Validates `config` (or the active configuration when `None`) and
    /// queues a run. Returns the queued record.
    pub fn submit(&self, config: Option<&[u8]>, options: SolverOptions) -> Result<RunRecord, ServiceError> {
        options.validate().map_err(|e| ServiceError::InvalidOptions(e.to_string()))?;
        let (bytes, version) = match config {
            Some(b) => (b.to_vec(), None),
            None => {
                let (b, v) = self.inner.store.get_config()?.ok_or(ServiceError::NoConfig)?;
                (b, Some(v))
            }
        };
        let text = String::from_utf8(bytes).map_err(|e| {
            ServiceError::InvalidConfig(ValidationReport {
                pass: false,
                violations: vec![netplan_core::config::Violation::new("$", format!("not UTF-8: {e}"))],
                advisories: Vec::new(),
            })
        })?;
        let (_, report) = validate_json(&text);
        if !report.pass {
            return Err(ServiceError::InvalidConfig(report));
        }
        let rec = RunRecord {
            id: new_run_id(),
            created_at: now_rfc3339(),
            started_at: None,
            finished_at: None,
            state: JobState::Queued,
            note: None,
            config_hash: sha256_hex(text.as_bytes()),
            config_version: version,
            config: text,
            options,
            plan: None,
        };
        self.inner.store.put_run(&rec)?;
        self.enqueue(rec.id.clone());
        Ok(rec)
    }

    pub fn get_run(&self, id: &str) -> Result<RunRecord, ServiceError> {
        self.inner.store.get_run(id)?.ok_or_else(|| ServiceError::RunNotFound(id.to_string()))
    }

    pub fn progress(&self, id: &str) -> Option<ProgressNote> {
        self.inner.progress.lock().unwrap().get(id).cloned()
    }

    /// Deterministic report, or external-model report when a client is
    /// configured. Reports are cached per run, role, mode and request.
    pub fn report(&self, role: Role, request: &ReportRequest) -> Result<(NarrativeReport, bool), ServiceError> {
        let rec = self.get_run(&request.run_id)?;
        let run = rec.artifacts().ok_or_else(|| ServiceError::NotReady(rec.id.clone()))?;
        let mode = match &self.inner.external {
            Some((setup, _)) => format!("external:{}:{}", setup.generator_model, setup.verifier_model),
            None => "deterministic".to_string(),
        };
        let key = (
            rec.id.clone(),
            role,
            mode,
            serde_json::to_string(&(&request.metrics, &request.sites, &request.weeks)).unwrap_or_default(),
        );
        if let Some(hit) = self.inner.reports.lock().unwrap().get(&key) {
            return Ok((hit.clone(), true));
        }
        let mut pipeline = ReportPipeline::new(&run);
        if let Some((setup, client)) = &self.inner.external {
            pipeline = pipeline.with_external(setup, client.as_ref());
        }
        let report = pipeline.run(role.as_str(), request)?;
        if report.warnings.is_empty() {
            self.inner.reports.lock().unwrap().insert(key, report.clone());
        }
        Ok((report, false))
    }

    /// Runs queued but not yet finished by the worker.
    pub fn queue_depth(&self) -> usize {
        self.inner.store.list_runs().iter().filter(|s| !s.state.is_terminal()).count()
    }

    /// Largest number of solver executions observed at the same instant.
    pub fn max_concurrent_solves(&self) -> usize {
        self.inner.max_running.load(Ordering::SeqCst)
    }

    pub fn completed_runs(&self) -> usize {
        self.inner.completed.load(Ordering::SeqCst)
    }

    /// Holds the worker before its next job until [`Service::resume`].
    pub fn pause(&self) {
        *self.inner.paused.lock().unwrap() = true;
    }

    pub fn resume(&self) {
        *self.inner.paused.lock().unwrap() = false;
        self.inner.resume.notify_all();
    }

    /// Stops accepting work and waits for queued jobs to finish.
    pub fn shutdown(&self) {
        self.resume();
        self.tx.lock().unwrap().take();
        if let Some(w) = self.worker.lock().unwrap().take() {
            let _ = w.join();
        }
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        self.tx.lock().unwrap().take();
        self.resume();
    }
}

impl Inner {
    fn wait_while_paused(&self) {
        let mut paused = self.paused.lock().unwrap();
        while *paused {
            paused = self.resume.wait(paused).unwrap();
        }
    }

    fn execute(&self, id: &str) -> Result<(), ServiceError> {
        let Some(mut rec) = self.store.get_run(id)? else {
            return Ok(());
        };
        if rec.state.is_terminal() {
            return Ok(());
        }
        rec.state = JobState::Running;
        rec.started_at = Some(now_rfc3339());
        self.store.put_run(&rec)?;

        let now = self.running.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_running.fetch_max(now, Ordering::SeqCst);
        let outcome = rec.parsed_config().map_err(|e| e.to_string()).and_then(|cfg| {
            let mut last = 0u64;
            plan_network_with_progress(&cfg, &rec.options, &mut |item, p| {
                if p.nodes == 1 || p.nodes >= last + 200 {
                    last = p.nodes;
                    let finite = |x: f64| x.is_finite().then_some(x);
                    self.progress.lock().unwrap().insert(
                        id.to_string(),
                        ProgressNote {
                            item: item.to_string(),
                            nodes: p.nodes,
                            open_nodes: p.open_nodes,
                            incumbent: p.incumbent,
                            best_bound: finite(p.best_bound),
                            gap: finite(p.gap),
                        },
                    );
                }
            })
            .map_err(|e| e.to_string())
        });
        self.running.fetch_sub(1, Ordering::SeqCst);
        self.progress.lock().unwrap().remove(id);

        rec.finished_at = Some(now_rfc3339());
        match outcome {
            Ok(plan) => {
                rec.note = serde_json::to_value(plan.status).ok().and_then(|v| v.as_str().map(str::to_string));
                rec.state = JobState::Done;
                rec.plan = Some(plan);
            }
            Err(e) => {
                rec.note = Some(e);
                rec.state = JobState::Failed;
            }
        }
        self.store.put_run(&rec)?;
        self.completed.fetch_add(1, Ordering::SeqCst);
        Ok(())
    }
}
