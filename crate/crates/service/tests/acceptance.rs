//! Acceptance checks. Prints one PASS or FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use netplan_core::config::Scenario;
use netplan_core::fixture::fixture_config;
use netplan_core::model::{build_model, extract_solution, PlanSolution};
use netplan_core::network::{plan_network, simulate_network, NetworkPlan};
use netplan_core::report::{
    generate_report, table_rows, validate_sections, ReportRequest, Role, WeekRange, SECTION_TITLES,
};
use netplan_core::sim::{simulate, InventoryPath};
use netplan_core::solver::{brute_force_milp, solve_lp, solve_milp, LpStatus, SolverOptions};
use netplan_service::store::JobState;
use netplan_service::Service;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::common::{
    check_golden, lagrangian_bound, oracle_scenarios, plan_violations, random_feasible_lp, random_plan,
    random_scenario, recorded_fixture_run, PLAN_TOL,
};
use support::{call, spawn_server, wait_terminal, SMALL_CONFIG};

type Outcome = Result<String, String>;

const ORACLE_COUNT: usize = 50;
const ORACLE_SEED: u64 = 2024;
const ORACLE_MAX_BINARIES: usize = 14;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

struct OracleCase {
    scenario: Scenario,
    plan: PlanSolution,
}

/// Cases, branch-and-bound seconds and the largest objective difference.
type OracleRun = Result<(Vec<OracleCase>, f64, f64), String>;

fn oracle_cases() -> &'static OracleRun {
    static CASES: OnceLock<OracleRun> = OnceLock::new();
    CASES.get_or_init(|| {
        let mut out = Vec::new();
        let (mut bb_secs, mut worst) = (0.0, 0.0f64);
        for (k, s) in oracle_scenarios(ORACLE_COUNT, ORACLE_SEED, ORACLE_MAX_BINARIES).into_iter().enumerate() {
            let (inst, map) = build_model(&s).map_err(|e| format!("instance {k}: {e}"))?;
            let start = Instant::now();
            let bb = solve_milp(&inst, &SolverOptions::default()).map_err(|e| format!("instance {k}: {e}"))?;
            bb_secs += start.elapsed().as_secs_f64();
            let bf = brute_force_milp(&inst).map_err(|e| format!("instance {k}: {e}"))?;
            if bb.status != bf.status {
                return Err(format!("instance {k}: status {:?} vs {:?}", bb.status, bf.status));
            }
            let diff = (bb.objective - bf.objective).abs();
            worst = worst.max(diff);
            if diff > 1e-6 {
                return Err(format!("instance {k}: objective {} vs {}", bb.objective, bf.objective));
            }
            let plan = extract_solution(&s, &inst, &map, &bb).map_err(|e| format!("instance {k}: {e}"))?;
            out.push(OracleCase { scenario: s, plan });
        }
        Ok((out, bb_secs, worst))
    })
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let (cases, bb_secs, worst) = oracle_cases().as_ref().map_err(String::clone)?;
    let total = start.elapsed().as_secs_f64();
    ensure(total < 60.0, || format!("took {total:.1} s"))?;
    Ok(format!(
        "{} instances, max |diff| {worst:.1e}, branch and bound {bb_secs:.2} s, total {total:.2} s",
        cases.len()
    ))
}

fn fixture_solve() -> &'static Result<(NetworkPlan, f64), String> {
    static PLAN: OnceLock<Result<(NetworkPlan, f64), String>> = OnceLock::new();
    PLAN.get_or_init(|| {
        let opts = SolverOptions { time_limit_secs: 120.0, ..SolverOptions::default() };
        let start = Instant::now();
        let plan = plan_network(&fixture_config(), &opts).map_err(|e| e.to_string())?;
        Ok((plan, start.elapsed().as_secs_f64()))
    })
}

fn fixture_scenario() -> Outcome {
    let cfg = fixture_config();
    let baseline = simulate_network(&cfg).map_err(|e| e.to_string())?;
    let ledger = &baseline[0];
    let week = |w: u32| ledger.weeks.iter().position(|&x| x == w).ok_or(format!("week {w} missing"));
    let dc1 = ledger.site("DC1").ok_or("DC1 missing")?;
    let low = dc1.sim_inv[week(38)?];
    let peak = dc1.demand[week(37)?];
    ensure(low == -1141.0, || format!("baseline DC1 week 38 is {low}"))?;
    ensure(peak == 184.0, || format!("DC1 demand week 37 is {peak}"))?;

    let (plan, secs) = fixture_solve().as_ref().map_err(String::clone)?;
    let item = &plan.items[0];
    let week33: f64 = item.plan.transfers.iter().filter(|t| t.week == 33).map(|t| t.qty).sum();
    ensure((week33 - 255.0).abs() <= PLAN_TOL, || format!("week 33 moves {week33}"))?;
    ensure(*secs <= 120.0, || format!("solve took {secs:.1} s"))?;
    ensure(plan.gap <= 0.01, || format!("gap {:.4}", plan.gap))?;
    let dc1_events = item.stockouts.iter().filter(|e| e.site == "DC1" && e.path == InventoryPath::Planned).count();
    ensure(dc1_events == 0, || format!("{dc1_events} planned DC1 stockout weeks"))?;
    ensure(plan.total_savings > 0.0, || format!("savings {}", plan.total_savings))?;
    Ok(format!(
        "baseline low -1141, peak demand 184, week 33 moves 255, gap {:.1e} in {secs:.1} s, savings {}, objective {}",
        plan.gap, plan.total_savings, plan.objective
    ))
}

fn constraint_suite() -> Outcome {
    let (cases, _, _) = oracle_cases().as_ref().map_err(String::clone)?;
    let mut checked = 0;
    for (k, c) in cases.iter().enumerate() {
        let v = plan_violations(&c.scenario, &c.plan);
        ensure(v.is_empty(), || format!("oracle instance {k}: {}", v.join("; ")))?;
        checked += c.plan.has_plan() as usize;
    }
    let (plan, _) = fixture_solve().as_ref().map_err(String::clone)?;
    let cfg = fixture_config();
    for item in &plan.items {
        let s = cfg.scenario(&item.plan.item).map_err(|e| e.to_string())?;
        let v = plan_violations(&s, &item.plan);
        ensure(v.is_empty(), || format!("fixture: {}", v.join("; ")))?;
        checked += 1;
    }
    Ok(format!("{checked} plans with no breach"))
}

fn simulator_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut rows = 0;
    for k in 0..100 {
        let s = random_scenario(&mut rng, 5, 8);
        let plan = random_plan(&mut rng, &s);
        let ledger = simulate(&s, Some(&plan)).map_err(|e| format!("config {k}: {e}"))?;
        for t in 0..s.num_weeks() {
            let (mut delta, mut delta_sim, mut net) = (0.0, 0.0, 0.0);
            for (i, site) in ledger.sites.iter().enumerate() {
                let prev = if t == 0 { s.initial_inventory[i] } else { site.inventory[t - 1] };
                let prev_sim = if t == 0 { s.initial_inventory[i] } else { site.sim_inv[t - 1] };
                delta += site.inventory[t] - prev;
                delta_sim += site.sim_inv[t] - prev_sim;
                net += s.receipts[i][t] - s.demand[i][t];
            }
            ensure(delta == net && delta_sim == net, || {
                format!("config {k} week {}: change {delta} / {delta_sim} vs {net}", s.weeks[t])
            })?;
            rows += 1;
        }
    }
    Ok(format!("100 configs, {rows} network-weeks, exact"))
}

fn solver_simulator_agreement() -> Outcome {
    let (cases, _, _) = oracle_cases().as_ref().map_err(String::clone)?;
    let mut worst = 0.0f64;
    for (k, c) in cases.iter().enumerate() {
        if !c.plan.has_plan() {
            continue;
        }
        let ledger = simulate(&c.scenario, Some(&c.plan.transfers)).map_err(|e| format!("instance {k}: {e}"))?;
        for (i, site) in ledger.sites.iter().enumerate() {
            for t in 0..c.scenario.num_weeks() {
                worst = worst.max((site.inventory[t] - c.plan.inventory[i][t]).abs());
            }
        }
    }
    ensure(worst <= PLAN_TOL, || format!("max |diff| {worst:.2e}"))?;
    Ok(format!("{} instances, max |diff| {worst:.1e}", cases.len()))
}

fn lp_duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let inst = random_feasible_lp(&mut rng);
        let lp = solve_lp(&inst).map_err(|e| format!("lp {k}: {e}"))?;
        ensure(lp.status == LpStatus::Optimal, || format!("lp {k}: {:?}", lp.status))?;
        let bound = lagrangian_bound(&inst, &lp).map_err(|e| format!("lp {k}: {e}"))?;
        let primal = inst.objective_value(&lp.primal);
        ensure(inst.max_row_violation(&lp.primal).0 <= 1e-9, || format!("lp {k}: primal infeasible"))?;
        let diff = (primal - bound).abs();
        worst = worst.max(diff);
        ensure(diff <= 1e-8, || format!("lp {k}: primal {primal} vs dual {bound}"))?;
    }
    Ok(format!("20 LPs, max |primal - dual| {worst:.1e}"))
}

fn report_rules() -> Outcome {
    let run = recorded_fixture_run();
    let transfer_weeks: Vec<String> = run.plan.items[0].plan.transfers.iter().map(|t| t.week.to_string()).collect();
    let num = |s: &str| s.replace(',', "").parse::<f64>().map_err(|e| format!("cell {s}: {e}"));
    let mut rows = 0;
    for role in Role::ALL {
        let a = generate_report(run, role.as_str(), &ReportRequest::new("fixture")).map_err(|e| e.to_string())?;
        let b = generate_report(run, role.as_str(), &ReportRequest::new("fixture")).map_err(|e| e.to_string())?;
        ensure(a.to_text() == b.to_text(), || format!("{role}: output differs between runs"))?;
        let titles: Vec<&str> = a.sections.iter().map(|s| s.title.as_str()).collect();
        ensure(titles == SECTION_TITLES, || format!("{role}: sections {titles:?}"))?;
        validate_sections(&a.sections).map_err(|e| format!("{role}: {e}"))?;
        for row in table_rows(&a.sections[1].body) {
            ensure(transfer_weeks.contains(&row[0]), || format!("{role}: week {} has no transfers", row[0]))?;
            ensure(num(&row[1])? > 0.0, || format!("{role}: week {} moves nothing", row[0]))?;
            ensure(num(&row[2])? > num(&row[3])?, || format!("{role}: week {} saves nothing", row[0]))?;
            rows += 1;
        }
        check_golden(&format!("fixture_{role}.md"), &a.to_text());
    }
    let narrowed = ReportRequest { weeks: Some(WeekRange { from: 35, to: 36 }), ..ReportRequest::new("fixture") };
    let r = generate_report(run, "manager", &narrowed).map_err(|e| e.to_string())?;
    let weeks: Vec<String> = table_rows(&r.sections[1].body).into_iter().map(|row| row[0].clone()).collect();
    ensure(weeks == ["35", "36"], || format!("week filter kept {weeks:?}"))?;
    Ok(format!("3 roles match goldens, {rows} savings rows checked, week filter honoured"))
}

fn service_round_trips() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let svc = std::sync::Arc::new(Service::open(dir.path(), None).map_err(|e| e.to_string())?);
    let base = spawn_server(std::sync::Arc::clone(&svc));
    let raw = format!("{}\n", SMALL_CONFIG.replace("  ", "\t"));
    let put = call("PUT", &format!("{base}/api/config"), Some(raw.as_bytes()));
    ensure(put.status == 200, || format!("config PUT returned {}", put.status))?;
    let got = call("GET", &format!("{base}/api/config"), None);
    ensure(got.body == raw.as_bytes(), || "config GET differs from PUT".into())?;

    let ids: Vec<String> = std::thread::scope(|scope| {
        let handles: Vec<_> =
            (0..4).map(|_| scope.spawn(|| call("POST", &format!("{base}/api/runs"), Some(b"{}")))).collect();
        handles.into_iter().map(|h| h.join().unwrap().json()["id"].as_str().unwrap_or_default().to_string()).collect()
    });
    let mut records: Vec<_> = ids.iter().map(|id| wait_terminal(&svc, id, Duration::from_secs(60))).collect();
    ensure(records.iter().all(|r| r.state == JobState::Done), || "a run did not finish".into())?;
    ensure(svc.max_concurrent_solves() == 1, || format!("{} concurrent solves", svc.max_concurrent_solves()))?;
    records.sort_by(|a, b| a.started_at.cmp(&b.started_at));
    for pair in records.windows(2) {
        ensure(pair[0].finished_at <= pair[1].started_at, || format!("{} overlaps {}", pair[0].id, pair[1].id))?;
    }

    svc.shutdown();
    drop(svc);
    let reopened = Service::open(dir.path(), None).map_err(|e| e.to_string())?;
    for r in &records {
        let again = reopened.get_run(&r.id).map_err(|e| e.to_string())?;
        ensure(&again == r, || format!("run {} changed across restart", r.id))?;
    }
    let (bytes, _) = reopened.store().get_config().map_err(|e| e.to_string())?.ok_or("config lost")?;
    ensure(bytes == raw.as_bytes(), || "config changed across restart".into())?;
    Ok(format!("config byte-identical, {} runs intact after restart, one solve at a time", records.len()))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("fixture scenario", fixture_scenario),
        ("constraint suite", constraint_suite),
        ("simulator conservation", simulator_conservation),
        ("solver/simulator agreement", solver_simulator_agreement),
        ("LP duality", lp_duality),
        ("report rules", report_rules),
        ("service round-trips", service_round_trips),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {name}: {reason}");
            }
        }
    }
    println!("{} of {} criteria passed", 8 - failed, 8);
    if failed > 0 {
        std::process::exit(1);
    }
}
