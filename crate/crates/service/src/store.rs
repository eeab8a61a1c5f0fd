//! On-disk persistence: one JSON document per run plus an index, and a
//! versioned active configuration. Every write goes to a temporary file
//! that is renamed into place.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use netplan_core::config::{validate_json, NetworkConfig, ValidationReport, Violation};
use netplan_core::network::NetworkPlan;
use netplan_core::report::RunArtifacts;
use netplan_core::solver::{SolveStatus, SolverOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub created_at: String,
    pub started_at: Option<String>,
    pub finished_at: Option<String>,
    pub state: JobState,
    /// Progress or failure message.
    pub note: Option<String>,
    pub config_hash: String,
    pub config_version: Option<u64>,
    /// Raw configuration text the run was submitted with.
    pub config: String,
    pub options: SolverOptions,
    pub plan: Option<NetworkPlan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub id: String,
    pub created_at: String,
    pub state: JobState,
    pub status: Option<SolveStatus>,
    pub objective: Option<f64>,
    pub gap: Option<f64>,
    pub total_units: Option<f64>,
    pub total_savings: Option<f64>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl RunRecord {
    pub fn summary(&self) -> RunSummary {
        let p = self.plan.as_ref();
        RunSummary {
            id: self.id.clone(),
            created_at: self.created_at.clone(),
            state: self.state,
            status: p.map(|p| p.status),
            objective: p.and_then(|p| finite(p.objective)),
            gap: p.and_then(|p| finite(p.gap)),
            total_units: p.map(|p| p.total_units),
            total_savings: p.map(|p| p.total_savings),
        }
    }

    pub fn parsed_config(&self) -> Result<NetworkConfig, serde_json::Error> {
        NetworkConfig::from_json(&self.config)
    }

    /// Run artifacts for report generation; `None` until the plan exists.
    pub fn artifacts(&self) -> Option<RunArtifacts> {
        let plan = self.plan.clone()?;
        let config = self.parsed_config().ok()?;
        Some(RunArtifacts { run_id: self.id.clone(), config, plan })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Timestamp-prefixed random id; lexicographic order follows creation time.
pub fn new_run_id() -> String {
    format!("{}-{}", chrono::Utc::now().format("%Y%m%dT%H%M%S%.6fZ"), &uuid::Uuid::new_v4().simple().to_string()[..12])
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension(format!("tmp-{}", uuid::Uuid::new_v4().simple()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("run {0} is terminal and cannot be modified")]
    Immutable(String),
    #[error("run id {0} is not valid")]
    BadId(String),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct ConfigMeta {
    version: u64,
    hash: String,
}

/// Data directory layout:
/// `runs/<id>.json`, `index.json`, `config/active.json`,
/// `config/meta.json`, `config/versions/<n>.json`.
pub struct Store {
    root: PathBuf,
    index: Mutex<Vec<RunSummary>>,
    config: Mutex<()>,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("runs"))?;
        fs::create_dir_all(root.join("config/versions"))?;
        let store = Store { root, index: Mutex::new(Vec::new()), config: Mutex::new(()) };
        let mut index = Vec::new();
        for rec in store.scan()? {
            index.push(rec.summary());
        }
        sort_summaries(&mut index);
        *store.index.lock().unwrap() = index;
        store.write_index()?;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn run_path(&self, id: &str) -> Result<PathBuf, StoreError> {
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '.') {
            return Err(StoreError::BadId(id.to_string()));
        }
        Ok(self.root.join("runs").join(format!("{id}.json")))
    }

    /// Every readable record whose config hash matches its snapshot.
    fn scan(&self) -> Result<Vec<RunRecord>, StoreError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(self.root.join("runs"))? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let Ok(text) = fs::read_to_string(&path) else { continue };
            match serde_json::from_str::<RunRecord>(&text) {
                Ok(r) if sha256_hex(r.config.as_bytes()) == r.config_hash => out.push(r),
                Ok(r) => tracing::warn!("run {} has a mismatched config hash; skipped", r.id),
                Err(e) => tracing::warn!("unreadable run record {}: {e}", path.display()),
            }
        }
        Ok(out)
    }

    fn write_index(&self) -> Result<(), StoreError> {
        let index = self.index.lock().unwrap();
        write_atomic(&self.root.join("index.json"), &serde_json::to_vec_pretty(&*index)?)?;
        Ok(())
    }

    /// Writes `rec`, refusing to overwrite a terminal record.
    pub fn put_run(&self, rec: &RunRecord) -> Result<(), StoreError> {
        let path = self.run_path(&rec.id)?;
        if let Some(old) = self.get_run(&rec.id)? {
            if old.state.is_terminal() {
                return Err(StoreError::Immutable(rec.id.clone()));
            }
        }
        write_atomic(&path, &serde_json::to_vec_pretty(rec)?)?;
        {
            let mut index = self.index.lock().unwrap();
            index.retain(|s| s.id != rec.id);
            index.push(rec.summary());
            sort_summaries(&mut index);
        }
        self.write_index()
    }

    pub fn get_run(&self, id: &str) -> Result<Option<RunRecord>, StoreError> {
        let path = match self.run_path(id) {
            Ok(p) => p,
            Err(_) => return Ok(None),
        };
        match fs::read_to_string(&path) {
            Ok(text) => Ok(Some(serde_json::from_str(&text)?)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Summaries, newest first.
    pub fn list_runs(&self) -> Vec<RunSummary> {
        self.index.lock().unwrap().clone()
    }

    /// Records left queued or running by a previous process, oldest first.
    pub fn unfinished(&self) -> Result<Vec<RunRecord>, StoreError> {
        let mut recs: Vec<RunRecord> = self.scan()?.into_iter().filter(|r| !r.state.is_terminal()).collect();
        recs.sort_by(|a, b| (&a.created_at, &a.id).cmp(&(&b.created_at, &b.id)));
        Ok(recs)
    }

    /// Active configuration bytes and version.
    pub fn get_config(&self) -> Result<Option<(Vec<u8>, u64)>, StoreError> {
        let _guard = self.config.lock().unwrap();
        self.read_config()
    }

    fn read_config(&self) -> Result<Option<(Vec<u8>, u64)>, StoreError> {
        let bytes = match fs::read(self.root.join("config/active.json")) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let meta: ConfigMeta = match fs::read(self.root.join("config/meta.json")) {
            Ok(m) => serde_json::from_slice(&m)?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => ConfigMeta::default(),
            Err(e) => return Err(e.into()),
        };
        Ok(Some((bytes, meta.version)))
    }

    /// Validates and stores `bytes` verbatim as the next version. Invalid
    /// documents leave the active configuration untouched.
    pub fn put_config(&self, bytes: &[u8]) -> Result<Result<(u64, ValidationReport), ValidationReport>, StoreError> {
        let text = match std::str::from_utf8(bytes) {
            Ok(t) => t,
            Err(e) => {
                return Ok(Err(ValidationReport {
                    pass: false,
                    violations: vec![Violation::new("$", format!("not UTF-8: {e}"))],
                    advisories: Vec::new(),
                }));
            }
        };
        let (_, report) = validate_json(text);
        if !report.pass {
            return Ok(Err(report));
        }
        let _guard = self.config.lock().unwrap();
        let version = self.read_config()?.map_or(0, |(_, v)| v) + 1;
        let dir = self.root.join("config");
        write_atomic(&dir.join("versions").join(format!("{version}.json")), bytes)?;
        write_atomic(&dir.join("active.json"), bytes)?;
        let meta = ConfigMeta { version, hash: sha256_hex(bytes) };
        write_atomic(&dir.join("meta.json"), &serde_json::to_vec_pretty(&meta)?)?;
        Ok(Ok((version, report)))
    }

    /// A retained earlier configuration version.
    pub fn config_version(&self, version: u64) -> Result<Option<Vec<u8>>, StoreError> {
        match fs::read(self.root.join("config/versions").join(format!("{version}.json"))) {
            Ok(b) => Ok(Some(b)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}

fn sort_summaries(v: &mut [RunSummary]) {
    v.sort_by(|a, b| (&b.created_at, &b.id).cmp(&(&a.created_at, &a.id)));
}
