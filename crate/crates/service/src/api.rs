//! REST endpoints under `/api`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use netplan_core::config::ValidationReport;
use netplan_core::report::{kpis_by_level, GroupSeries, Level, Metric, ReportError, ReportRequest, Role, WeekRange};
use netplan_core::sim::SiteSeries;
use netplan_core::solver::SolverOptions;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::service::{ProgressNote, Service, ServiceError};
use crate::store::{JobState, RunRecord, RunSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub details: Vec<String>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { code: code.into(), message: message.into(), details: Vec::new() } }
    }

    fn with_details(mut self, details: Vec<String>) -> Self {
        self.body.details = details;
        self
    }

    fn invalid_config(report: &ValidationReport) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_config", "configuration failed validation")
            .with_details(report.violations.iter().map(|v| v.to_string()).collect())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::InvalidConfig(r) => ApiError::invalid_config(&r),
            ServiceError::NoConfig => ApiError::new(StatusCode::CONFLICT, "no_config", e.to_string()),
            ServiceError::InvalidOptions(m) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_options", m),
            ServiceError::RunNotFound(_) => ApiError::new(StatusCode::NOT_FOUND, "not_found", e.to_string()),
            ServiceError::NotReady(_) => ApiError::new(StatusCode::CONFLICT, "run_not_ready", e.to_string()),
            ServiceError::Report(r) => r.into(),
            ServiceError::Store(s) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", s.to_string()),
        }
    }
}

impl From<ReportError> for ApiError {
    fn from(e: ReportError) -> Self {
        let (status, code) = match &e {
            ReportError::RunNotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            ReportError::UnknownRole(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unknown_role"),
            ReportError::BadRequest(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_request"),
            ReportError::Reflection(_) => (StatusCode::INTERNAL_SERVER_ERROR, "reflection_failed"),
            ReportError::Setup(_) => (StatusCode::INTERNAL_SERVER_ERROR, "external_setup"),
        };
        let details = match &e {
            ReportError::Reflection(v) => v.missing.clone(),
            _ => Vec::new(),
        };
        ApiError::new(status, code, e.to_string()).with_details(details)
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/config", get(get_config).put(put_config))
        .route("/api/runs", get(list_runs).post(submit_run))
        .route("/api/runs/{id}", get(get_run))
        .route("/api/runs/{id}/transfers", get(transfers))
        .route("/api/runs/{id}/series/{site}", get(series))
        .route("/api/runs/{id}/kpis", get(kpis))
        .route("/api/runs/{id}/report", post(report))
        .with_state(service)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn health(State(svc): State<Arc<Service>>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "queue_depth": svc.queue_depth(),
        "external_reports": svc.has_external(),
    }))
}

async fn get_config(State(svc): State<Arc<Service>>) -> ApiResult<Response> {
    let (bytes, version) = blocking(move || Ok(svc.store().get_config().map_err(ServiceError::from)?))
        .await?
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "no_config", "no configuration has been stored"))?;
    let mut headers = HeaderMap::new();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    headers.insert("x-config-version", HeaderValue::from(version));
    Ok((headers, bytes).into_response())
}

async fn put_config(State(svc): State<Arc<Service>>, body: Bytes) -> ApiResult<Json<Value>> {
    blocking(move || match svc.store().put_config(&body).map_err(ServiceError::from)? {
        Ok((version, report)) => Ok(Json(json!({
            "version": version,
            "advisories": report.advisories,
        }))),
        Err(report) => Err(ApiError::invalid_config(&report)),
    })
    .await
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmitBody {
    /// Inline configuration; the active one is used when absent.
    config: Option<Value>,
    #[serde(default)]
    options: Option<SolverOptions>,
}

async fn submit_run(State(svc): State<Arc<Service>>, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let parsed: SubmitBody = if body.iter().all(|b| b.is_ascii_whitespace()) {
        SubmitBody::default()
    } else {
        serde_json::from_slice(&body)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", e.to_string()))?
    };
    let rec = blocking(move || {
        let inline = parsed.config.map(|v| serde_json::to_vec_pretty(&v).unwrap_or_default());
        Ok(svc.submit(inline.as_deref(), parsed.options.unwrap_or_default())?)
    })
    .await?;
    Ok((StatusCode::ACCEPTED, Json(json!({ "id": rec.id, "state": rec.state }))))
}

async fn list_runs(State(svc): State<Arc<Service>>) -> Json<Vec<RunSummary>> {
    Json(svc.store().list_runs())
}

#[derive(Serialize)]
struct RunView {
    #[serde(flatten)]
    record: RunRecord,
    progress: Option<ProgressNote>,
}

async fn load(svc: &Arc<Service>, id: String) -> ApiResult<RunRecord> {
    let svc = Arc::clone(svc);
    blocking(move || Ok(svc.get_run(&id)?)).await
}

async fn load_done(svc: &Arc<Service>, id: String) -> ApiResult<RunRecord> {
    let rec = load(svc, id).await?;
    if rec.state != JobState::Done || rec.plan.is_none() {
        return Err(ServiceError::NotReady(rec.id).into());
    }
    Ok(rec)
}

async fn get_run(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let record = load(&svc, id).await?;
    let progress = svc.progress(&record.id);
    Ok(Json(serde_json::to_value(RunView { record, progress }).unwrap_or(Value::Null)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklyQty {
    pub week: u32,
    pub qty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub item: String,
    pub src: String,
    pub dst: String,
    pub total: f64,
    pub weekly: Vec<WeeklyQty>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransfersView {
    pub run_id: String,
    pub sites: Vec<String>,
    pub weeks: Vec<u32>,
    pub lanes: Vec<Lane>,
    pub weekly_totals: Vec<WeeklyQty>,
    pub total: f64,
}

/// Lanes with a per-week breakdown, in item, source, destination order.
pub fn transfers_view(rec: &RunRecord) -> Option<TransfersView> {
    let plan = rec.plan.as_ref()?;
    let mut lanes: Vec<Lane> = Vec::new();
    let weeks = plan.items.first().map(|i| i.plan.weeks.clone()).unwrap_or_default();
    let sites = plan.items.first().map(|i| i.plan.sites.clone()).unwrap_or_default();
    for item in &plan.items {
        let mut item_lanes: Vec<Lane> = Vec::new();
        for t in &item.plan.transfers {
            let lane = match item_lanes.iter_mut().find(|l| l.src == t.src && l.dst == t.dst) {
                Some(l) => l,
                None => {
                    item_lanes.push(Lane {
                        item: item.plan.item.clone(),
                        src: t.src.clone(),
                        dst: t.dst.clone(),
                        total: 0.0,
                        weekly: Vec::new(),
                    });
                    item_lanes.last_mut().unwrap()
                }
            };
            lane.total += t.qty;
            lane.weekly.push(WeeklyQty { week: t.week, qty: t.qty });
        }
        let pos = |s: &str| sites.iter().position(|x| x == s);
        item_lanes.sort_by_key(|l| (pos(&l.src), pos(&l.dst)));
        lanes.extend(item_lanes);
    }
    let weekly_totals: Vec<WeeklyQty> = weeks
        .iter()
        .map(|&w| WeeklyQty {
            week: w,
            qty: lanes.iter().flat_map(|l| &l.weekly).filter(|q| q.week == w).map(|q| q.qty).sum(),
        })
        .filter(|q| q.qty > 0.0)
        .collect();
    Some(TransfersView {
        run_id: rec.id.clone(),
        total: lanes.iter().map(|l| l.total).sum(),
        sites,
        weeks,
        lanes,
        weekly_totals,
    })
}

async fn transfers(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<TransfersView>> {
    let rec = load_done(&svc, id).await?;
    Ok(Json(transfers_view(&rec).expect("done runs carry a plan")))
}

#[derive(Debug, Deserialize)]
struct SeriesQuery {
    item: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesView {
    pub run_id: String,
    pub item: String,
    pub weeks: Vec<u32>,
    #[serde(flatten)]
    pub series: SiteSeries,
}

async fn series(
    State(svc): State<Arc<Service>>,
    Path((id, site)): Path<(String, String)>,
    Query(q): Query<SeriesQuery>,
) -> ApiResult<Json<SeriesView>> {
    let rec = load_done(&svc, id).await?;
    let plan = rec.plan.as_ref().expect("done runs carry a plan");
    let item = match &q.item {
        Some(i) => plan
            .item(i)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("unknown item {i}")))?,
        None => {
            plan.items.first().ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", "run has no items"))?
        }
    };
    let s = item
        .ledger
        .site(&site)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("unknown site {site}")))?;
    Ok(Json(SeriesView {
        run_id: rec.id.clone(),
        item: item.plan.item.clone(),
        weeks: item.ledger.weeks.clone(),
        series: s.clone(),
    }))
}

#[derive(Debug, Deserialize)]
struct KpiQuery {
    level: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiView {
    pub run_id: String,
    pub level: Level,
    pub sites: usize,
    pub status: netplan_core::solver::SolveStatus,
    pub objective: Option<f64>,
    pub gap: Option<f64>,
    pub total_units: f64,
    pub total_savings: f64,
    pub groups: Vec<GroupSeries>,
}

async fn kpis(
    State(svc): State<Arc<Service>>,
    Path(id): Path<String>,
    Query(q): Query<KpiQuery>,
) -> ApiResult<Json<KpiView>> {
    let level: Level = q.level.as_deref().unwrap_or("item").parse()?;
    let rec = load_done(&svc, id).await?;
    let run = rec
        .artifacts()
        .ok_or_else(|| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", "stored config unreadable"))?;
    let finite = |x: f64| x.is_finite().then_some(x);
    Ok(Json(KpiView {
        run_id: rec.id.clone(),
        level,
        sites: run.config.sites.len(),
        status: run.plan.status,
        objective: finite(run.plan.objective),
        gap: finite(run.plan.gap),
        total_units: run.plan.total_units,
        total_savings: run.plan.total_savings,
        groups: kpis_by_level(&run, level),
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportBody {
    role: String,
    #[serde(default)]
    metrics: Vec<Metric>,
    #[serde(default)]
    sites: Vec<String>,
    #[serde(default)]
    weeks: Option<WeekRange>,
}

async fn report(State(svc): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let body: ReportBody = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", e.to_string()))?;
    let role: Role = body.role.parse()?;
    let request = ReportRequest { run_id: id, metrics: body.metrics, sites: body.sites, weeks: body.weeks };
    let (report, hit) = blocking(move || Ok(svc.report(role, &request)?)).await?;
    let text = report.to_text();
    let mut value = serde_json::to_value(&report).unwrap_or(Value::Null);
    value["text"] = Value::String(text);
    let mut headers = HeaderMap::new();
    headers.insert("x-cache", HeaderValue::from_static(if hit { "hit" } else { "miss" }));
    Ok((headers, Json(value)).into_response())
}
