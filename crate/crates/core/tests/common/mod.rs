#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use netplan_core::config::{NetworkConfig, Scenario};
use netplan_core::instance::{MilpInstance, Relation, Sense};
use netplan_core::model::{build_model, PlanSolution, Transfer};
use netplan_core::report::RunArtifacts;
use netplan_core::solver::LpResult;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SMALL_CONFIG: &str = r#"{
  "sites": [
    {"id": "A", "region": "North"},
    {"id": "B", "region": "North"},
    {"id": "C", "region": "South"}
  ],
  "items": [{"id": "P1", "family": "Tools"}],
  "horizon": [1, 2, 3, 4],
  "frozen_weeks": 1,
  "parameters": {
    "demand": {"A": [10, 30, 30, 30], "B": 5, "C": 5},
    "initial_inventory": {"A": 20, "B": 60, "C": 60},
    "safety_stock": 10,
    "ss_benefit": 1,
    "shortage_penalty": 10,
    "fixed_ship_cost": 5,
    "min_ship_qty": 5
  }
}"#;

pub fn small_config() -> NetworkConfig {
    NetworkConfig::from_json(SMALL_CONFIG).unwrap()
}

pub fn empty_scenario(n: usize, nw: usize) -> Scenario {
    Scenario {
        item: "X".into(),
        sites: (0..n).map(|i| format!("S{i}")).collect(),
        weeks: (1..=nw as u32).collect(),
        frozen_weeks: 0,
        demand: vec![vec![0.0; nw]; n],
        receipts: vec![vec![0.0; nw]; n],
        initial_inventory: vec![0.0; n],
        safety_stock: vec![vec![0.0; nw]; n],
        ss_benefit: vec![vec![0.0; nw]; n],
        shortage_penalty: vec![vec![0.0; nw]; n],
        fixed_ship_cost: vec![vec![0.0; nw]; n],
        min_ship_qty: 0.0,
        c_hold: vec![1.0; n],
        wos_window: 4,
    }
}

/// Up to `max_sites` sites and `max_weeks` weeks, integer parameters in [0, 20].
pub fn random_scenario(rng: &mut ChaCha8Rng, max_sites: usize, max_weeks: usize) -> Scenario {
    let n = rng.gen_range(1..=max_sites);
    let nw = rng.gen_range(1..=max_weeks);
    let mut s = empty_scenario(n, nw);
    let v = |rng: &mut ChaCha8Rng| rng.gen_range(0..=20) as f64;
    s.frozen_weeks = rng.gen_range(0..=nw.min(1));
    s.min_ship_qty = v(rng);
    for i in 0..n {
        s.initial_inventory[i] = v(rng);
        for t in 0..nw {
            s.demand[i][t] = v(rng);
            s.receipts[i][t] = v(rng);
            s.safety_stock[i][t] = v(rng);
            s.ss_benefit[i][t] = v(rng);
            s.shortage_penalty[i][t] = v(rng);
            s.fixed_ship_cost[i][t] = v(rng);
        }
    }
    s
}

pub fn free_binaries(s: &Scenario) -> usize {
    let (inst, _) = build_model(s).unwrap();
    inst.integer_columns().filter(|&j| inst.columns[j].lower < inst.columns[j].upper).count()
}

/// Deterministic set of oracle instances small enough for exhaustive enumeration.
pub fn oracle_scenarios(count: usize, seed: u64, max_binaries: usize) -> Vec<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let s = random_scenario(&mut rng, 3, 3);
        if free_binaries(&s) <= max_binaries {
            out.push(s);
        }
    }
    out
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).parent().unwrap().join("core/tests/golden")
}

pub fn updating_golden() -> bool {
    std::env::var_os("UPDATE_GOLDEN").is_some()
}

/// Compares `actual` with a golden file, rewriting it when `UPDATE_GOLDEN` is set.
pub fn check_golden(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if updating_golden() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden file {}: {e}; run with UPDATE_GOLDEN=1", path.display()));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

/// Recorded fixture run. Rebuilt from a fresh solve when `UPDATE_GOLDEN` is set.
pub fn recorded_fixture_run() -> &'static RunArtifacts {
    static RUN: OnceLock<RunArtifacts> = OnceLock::new();
    RUN.get_or_init(|| {
        let path = golden_dir().join("fixture_run.json");
        if updating_golden() {
            use netplan_core::fixture::fixture_config;
            use netplan_core::network::plan_network;
            use netplan_core::solver::SolverOptions;
            let config = fixture_config();
            let plan = plan_network(&config, &SolverOptions::default()).unwrap();
            let run = RunArtifacts { run_id: "fixture".into(), config, plan };
            std::fs::write(&path, serde_json::to_string_pretty(&run).unwrap()).unwrap();
            return run;
        }
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
    })
}

/// Up to three random transfers per week between distinct sites.
pub fn random_plan(rng: &mut ChaCha8Rng, s: &Scenario) -> Vec<Transfer> {
    let n = s.num_sites();
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    for &week in &s.weeks {
        for _ in 0..rng.gen_range(0..=3) {
            let src = rng.gen_range(0..n);
            let dst = (src + rng.gen_range(1..n)) % n;
            out.push(Transfer {
                src: s.sites[src].clone(),
                dst: s.sites[dst].clone(),
                week,
                qty: rng.gen_range(0..=30) as f64,
            });
        }
    }
    out
}

pub const PLAN_TOL: f64 = 1e-6;

/// Structural checks on an extracted plan. Returns one message per breach.
pub fn plan_violations(s: &Scenario, plan: &PlanSolution) -> Vec<String> {
    let mut out = Vec::new();
    if !plan.has_plan() {
        return out;
    }
    let (n, nw) = (s.num_sites(), s.num_weeks());
    let mut sends = vec![vec![false; nw]; n];
    let mut recvs = vec![vec![false; nw]; n];
    for tr in &plan.transfers {
        let t = s.week_index(tr.week).unwrap();
        if s.is_frozen(t) {
            out.push(format!("transfer {}->{} in frozen week {}", tr.src, tr.dst, tr.week));
        }
        if tr.qty < s.min_ship_qty - PLAN_TOL {
            out.push(format!("lane {}->{} week {} carries {} < {}", tr.src, tr.dst, tr.week, tr.qty, s.min_ship_qty));
        }
        sends[s.site_index(&tr.src).unwrap()][t] = true;
        recvs[s.site_index(&tr.dst).unwrap()][t] = true;
    }
    for i in 0..n {
        for t in 0..nw {
            let site = &s.sites[i];
            if sends[i][t] && recvs[i][t] {
                out.push(format!("{site} sends and receives in week {}", s.weeks[t]));
            }
            let (inv, ip, im, is, ie) =
                (plan.inventory[i][t], plan.ip[i][t], plan.im[i][t], plan.is[i][t], plan.ie[i][t]);
            if (inv - (ip - im)).abs() > PLAN_TOL {
                out.push(format!("{site} week {}: I != IP - IM", s.weeks[t]));
            }
            if (ip - (is + ie)).abs() > PLAN_TOL {
                out.push(format!("{site} week {}: IP != IS + IE", s.weeks[t]));
            }
            if is < -PLAN_TOL || is > s.safety_stock[i][t] + PLAN_TOL {
                out.push(format!("{site} week {}: IS {is} outside [0, {}]", s.weeks[t], s.safety_stock[i][t]));
            }
            if ip < -PLAN_TOL || im < -PLAN_TOL || ie < -PLAN_TOL {
                out.push(format!("{site} week {}: negative split", s.weeks[t]));
            }
        }
    }
    out
}

/// Bounded LP with a known feasible point, random sense and row relations.
pub fn random_feasible_lp(rng: &mut ChaCha8Rng) -> MilpInstance {
    let sense = if rng.gen_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    let mut inst = MilpInstance::new(sense);
    let n = rng.gen_range(2..=8);
    let m = rng.gen_range(1..=6);
    let mut x0 = Vec::new();
    for j in 0..n {
        let lo = -(rng.gen_range(0..=5) as f64);
        let hi = rng.gen_range(1..=10) as f64;
        x0.push(rng.gen_range(lo..=hi));
        inst.add_column(format!("x{j}"), lo, hi, false, rng.gen_range(-10..=10) as f64);
    }
    for r in 0..m {
        let mut coefs: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                coefs.push((j, rng.gen_range(-5..=5) as f64));
            }
        }
        let lhs: f64 = coefs.iter().map(|&(j, a)| a * x0[j]).sum();
        let slack = rng.gen_range(0..=4) as f64;
        let (relation, rhs) = match rng.gen_range(0..3) {
            0 => (Relation::Le, (lhs + slack).ceil()),
            1 => (Relation::Ge, (lhs - slack).floor()),
            _ => (Relation::Eq, lhs),
        };
        inst.add_row(format!("r{r}"), coefs, relation, rhs);
    }
    inst
}

/// Lagrangian bound from the reported row duals, computed without the
/// solver: `y.b` plus the best bound-constrained value of each reduced
/// cost. Fails when a dual has the wrong sign for its row.
pub fn lagrangian_bound(inst: &MilpInstance, lp: &LpResult) -> Result<f64, String> {
    let max = inst.sense == Sense::Maximize;
    let y = &lp.duals;
    if y.len() != inst.num_rows() {
        return Err(format!("{} duals for {} rows", y.len(), inst.num_rows()));
    }
    let mut reduced: Vec<f64> = inst.columns.iter().map(|c| c.objective).collect();
    let mut bound = 0.0;
    for (row, &yi) in inst.rows.iter().zip(y) {
        let wrong = match (row.relation, max) {
            (Relation::Le, true) | (Relation::Ge, false) => yi < -1e-9,
            (Relation::Ge, true) | (Relation::Le, false) => yi > 1e-9,
            (Relation::Eq, _) => false,
        };
        if wrong {
            return Err(format!("row {} dual {yi} has the wrong sign", row.label));
        }
        bound += yi * row.rhs;
        for &(j, a) in &row.coefs {
            reduced[j] -= yi * a;
        }
    }
    for (c, d) in inst.columns.iter().zip(reduced) {
        let (at_lo, at_hi) = (d * c.lower, d * c.upper);
        bound += if max { at_lo.max(at_hi) } else { at_lo.min(at_hi) };
    }
    Ok(bound)
}
