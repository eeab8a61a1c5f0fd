//! Solves the bundled fixture and prints the report for each role.
//!
//! cargo run --release -p netplan-core --example fixture_report

use netplan_core::fixture::fixture_config;
use netplan_core::network::plan_network;
use netplan_core::report::{generate_report, ReportRequest, Role, RunArtifacts};
use netplan_core::solver::SolverOptions;

fn main() {
    let config = fixture_config();
    let plan = plan_network(&config, &SolverOptions::default()).expect("fixture solves");
    eprintln!(
        "status {:?}, objective {}, gap {:.2e}, units {}, savings {}",
        plan.status, plan.objective, plan.gap, plan.total_units, plan.total_savings
    );
    if let Some(path) = std::env::args().nth(1) {
        let run = RunArtifacts { run_id: "fixture".into(), config: config.clone(), plan: plan.clone() };
        std::fs::write(&path, serde_json::to_string_pretty(&run).unwrap()).unwrap();
    }
    let run = RunArtifacts { run_id: "fixture".into(), config, plan };
    for role in Role::ALL {
        let report = generate_report(&run, role.as_str(), &ReportRequest::new("fixture")).unwrap();
        println!("{}", report.to_text());
    }
}
