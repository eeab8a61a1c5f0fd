//! Python module `netplan`. Documents cross the boundary as JSON text.

use netplan_core::config::{validate_json, NetworkConfig};
use netplan_core::network::{plan_network, simulate_network, NetworkPlan};
use netplan_core::report::{generate_report, ReportRequest, RunArtifacts};
use netplan_core::solver::SolverOptions;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

/// Validation report for a configuration document.
pub fn validate_text(config: &str) -> String {
    let (_, report) = validate_json(config);
    serde_json::to_string(&report).expect("report serializes")
}

fn parse(config: &str) -> Result<NetworkConfig, String> {
    let (cfg, report) = validate_json(config);
    match cfg {
        Some(cfg) if report.pass => Ok(cfg),
        _ => Err(report.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")),
    }
}

/// No-transfer projection of every item as CSV with one header row.
pub fn simulate_text(config: &str) -> Result<String, String> {
    let cfg = parse(config)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for ledger in simulate_network(&cfg).map_err(|e| e.to_string())? {
        for row in ledger.rows() {
            w.serialize(row).map_err(|e| e.to_string())?;
        }
    }
    String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

/// Solved network plan as JSON.
pub fn solve_text(config: &str, time_limit: f64, rel_gap: f64) -> Result<String, String> {
    let cfg = parse(config)?;
    let opts = SolverOptions { time_limit_secs: time_limit, rel_gap, ..SolverOptions::default() };
    opts.validate().map_err(|e| e.to_string())?;
    let plan = plan_network(&cfg, &opts).map_err(|e| e.to_string())?;
    serde_json::to_string(&plan).map_err(|e| e.to_string())
}

/// Deterministic narrative report for a configuration and its plan.
pub fn report_text(config: &str, plan: &str, role: &str) -> Result<String, String> {
    let config = parse(config)?;
    let plan: NetworkPlan = serde_json::from_str(plan).map_err(|e| format!("plan: {e}"))?;
    let run = RunArtifacts { run_id: "local".into(), config, plan };
    let report = generate_report(&run, role, &ReportRequest::new("local")).map_err(|e| e.to_string())?;
    Ok(report.to_text())
}

fn value_error(e: String) -> PyErr {
    PyValueError::new_err(e)
}

#[pyfunction]
fn validate_config(config: &str) -> String {
    validate_text(config)
}

#[pyfunction]
fn simulate(config: &str) -> PyResult<String> {
    simulate_text(config).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (config, time_limit = 300.0, rel_gap = 1e-6))]
fn solve(py: Python<'_>, config: &str, time_limit: f64, rel_gap: f64) -> PyResult<String> {
    let config = config.to_owned();
    py.detach(move || solve_text(&config, time_limit, rel_gap)).map_err(value_error)
}

#[pyfunction]
fn report(config: &str, plan: &str, role: &str) -> PyResult<String> {
    report_text(config, plan, role).map_err(value_error)
}

#[pyfunction]
fn fixture_config() -> String {
    netplan_core::fixture::FIXTURE_JSON.to_string()
}

#[pymodule]
fn netplan(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add_function(wrap_pyfunction!(fixture_config, m)?)?;
    Ok(())
}
