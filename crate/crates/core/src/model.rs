//! Transfer-planning MILP: construction from a [`Scenario`] and translation
//! of solver output back into a [`PlanSolution`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::Scenario;
use crate::error::ModelError;
use crate::instance::{MilpInstance, Relation, Sense};
use crate::solver::{solve_milp_with_progress, MilpResult, Progress, SolveStatus, SolverOptions};

pub const FEASIBILITY_TOL: f64 = 1e-6;
const SNAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    X,
    W,
    Y,
    Z,
    I,
    IP,
    IM,
    IS,
    IE,
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One column: its kind, site (the source for lanes), destination for
/// lanes, and week position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarIndex {
    pub kind: VarKind,
    pub site: usize,
    pub dst: Option<usize>,
    pub week: usize,
    pub column: usize,
}

/// Bijection between `(kind, indices)` and column ids.
#[derive(Debug, Clone, PartialEq)]
pub struct VarMap {
    n: usize,
    entries: Vec<VarIndex>,
    /// `[week][src][dst]`, `None` on the diagonal.
    x: Vec<Vec<Vec<Option<usize>>>>,
    w: Vec<Vec<Vec<Option<usize>>>>,
    /// `[kind - Y][site][week]` for the per-site kinds.
    site_vars: [Vec<Vec<usize>>; 7],
}

const SITE_KINDS: [VarKind; 7] =
    [VarKind::Y, VarKind::Z, VarKind::I, VarKind::IP, VarKind::IM, VarKind::IS, VarKind::IE];

impl VarMap {
    pub fn entries(&self) -> &[VarIndex] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn x(&self, src: usize, dst: usize, t: usize) -> Option<usize> {
        self.x[t][src][dst]
    }

    pub fn w(&self, src: usize, dst: usize, t: usize) -> Option<usize> {
        self.w[t][src][dst]
    }

    pub fn site_var(&self, kind: VarKind, site: usize, t: usize) -> usize {
        let k = SITE_KINDS.iter().position(|k| *k == kind).expect("lane kinds have no per-site column");
        self.site_vars[k][site][t]
    }

    pub fn get(&self, kind: VarKind, site: usize, dst: Option<usize>, t: usize) -> Option<usize> {
        match (kind, dst) {
            (VarKind::X, Some(d)) => self.x.get(t)?.get(site)?.get(d).copied().flatten(),
            (VarKind::W, Some(d)) => self.w.get(t)?.get(site)?.get(d).copied().flatten(),
            (VarKind::X | VarKind::W, None) | (_, Some(_)) => None,
            (k, None) => {
                if site < self.n && t < self.x.len() {
                    Some(self.site_var(k, site, t))
                } else {
                    None
                }
            }
        }
    }

    /// Lanes `(src, dst)` in column order.
    pub fn lanes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |a| (0..n).filter(move |b| *b != a).map(move |b| (a, b)))
    }
}

/// Per-week big-M: all stock that could exist anywhere in the network by
/// week `t`, i.e. positive opening stock plus cumulative receipts.
pub fn tighten_big_m(s: &Scenario) -> Vec<f64> {
    let opening: f64 = s.initial_inventory.iter().map(|x| x.max(0.0)).sum();
    let mut cum = 0.0;
    (0..s.num_weeks())
        .map(|t| {
            cum += s.receipts.iter().map(|r| r[t]).sum::<f64>();
            (opening + cum).max(0.0)
        })
        .collect()
}

fn col_name(kind: VarKind, s: &Scenario, site: usize, dst: Option<usize>, t: usize) -> String {
    match dst {
        Some(d) => format!("{kind}[{}>{}@{}]", s.sites[site], s.sites[d], s.weeks[t]),
        None => format!("{kind}[{}@{}]", s.sites[site], s.weeks[t]),
    }
}

pub fn build_model(s: &Scenario) -> Result<(MilpInstance, VarMap), ModelError> {
    let violations = s.validate();
    if !violations.is_empty() {
        return Err(ModelError::InvalidConfig(violations));
    }
    let n = s.num_sites();
    let nw = s.num_weeks();
    let big_m = tighten_big_m(s);

    // Inventory box: opening positions, cumulative receipts and demand, and
    // every unit that could cross a lane so far.
    let abs_open: f64 = s.initial_inventory.iter().map(|x| x.abs()).sum();
    let mut inv_box = Vec::with_capacity(nw);
    let mut acc = abs_open;
    for t in 0..nw {
        acc += (0..n).map(|i| s.receipts[i][t] + s.demand[i][t]).sum::<f64>();
        acc += n.saturating_sub(1) as f64 * big_m[t];
        inv_box.push(acc);
    }

    let mut inst = MilpInstance::new(Sense::Maximize);
    let mut entries = Vec::new();
    let mut x = vec![vec![vec![None; n]; n]; nw];
    let mut w = x.clone();
    let mut site_vars: [Vec<Vec<usize>>; 7] = Default::default();
    for sv in site_vars.iter_mut() {
        *sv = vec![vec![0; nw]; n];
    }

    let push = |inst: &mut MilpInstance,
                entries: &mut Vec<VarIndex>,
                kind: VarKind,
                site: usize,
                dst: Option<usize>,
                t: usize,
                lb: f64,
                ub: f64,
                integer: bool,
                obj: f64| {
        let column = inst.add_column(col_name(kind, s, site, dst, t), lb, ub, integer, obj);
        entries.push(VarIndex { kind, site, dst, week: t, column });
        column
    };

    for t in 0..nw {
        let frozen = s.is_frozen(t);
        let lane_ub = if frozen { 0.0 } else { big_m[t] };
        let bin_ub = if frozen { 0.0 } else { 1.0 };
        for a in 0..n {
            for b in (0..n).filter(|b| *b != a) {
                x[t][a][b] = Some(push(&mut inst, &mut entries, VarKind::X, a, Some(b), t, 0.0, lane_ub, false, 0.0));
            }
        }
        for a in 0..n {
            for b in (0..n).filter(|b| *b != a) {
                w[t][a][b] = Some(push(&mut inst, &mut entries, VarKind::W, a, Some(b), t, 0.0, bin_ub, true, 0.0));
            }
        }
        for i in 0..n {
            let bx = inv_box[t];
            let specs = [
                (VarKind::Y, 0.0, bin_ub, true, 0.0),
                (VarKind::Z, 0.0, bin_ub, true, -s.fixed_ship_cost[i][t]),
                (VarKind::I, -bx, bx, false, 0.0),
                (VarKind::IP, 0.0, bx, false, 0.0),
                (VarKind::IM, 0.0, bx, false, -s.shortage_penalty[i][t]),
                (VarKind::IS, 0.0, s.safety_stock[i][t], false, s.ss_benefit[i][t]),
                (VarKind::IE, 0.0, bx, false, 0.0),
            ];
            for (k, (kind, lb, ub, integer, obj)) in specs.into_iter().enumerate() {
                site_vars[k][i][t] = push(&mut inst, &mut entries, kind, i, None, t, lb, ub, integer, obj);
            }
        }
    }

    let map = VarMap { n, entries, x, w, site_vars };
    let q = s.min_ship_qty;

    for t in 0..nw {
        let wk = s.weeks[t];
        let m = big_m[t];
        for i in 0..n {
            let site = &s.sites[i];
            let inv = map.site_var(VarKind::I, i, t);
            let mut coefs = vec![(inv, 1.0)];
            let mut rhs = s.receipts[i][t] - s.demand[i][t];
            let tag = if t == 0 {
                rhs += s.initial_inventory[i];
                "open"
            } else {
                coefs.push((map.site_var(VarKind::I, i, t - 1), -1.0));
                "balance"
            };
            for j in (0..n).filter(|j| *j != i) {
                coefs.push((map.x(j, i, t).unwrap(), -1.0));
                coefs.push((map.x(i, j, t).unwrap(), 1.0));
            }
            inst.add_row(format!("{tag}:i={site},t={wk}"), coefs, Relation::Eq, rhs);
        }

        if !s.is_frozen(t) {
            for (a, b) in map.lanes() {
                let lane = format!("i={},i'={},t={wk}", s.sites[a], s.sites[b]);
                let xc = map.x(a, b, t).unwrap();
                let wc = map.w(a, b, t).unwrap();
                inst.add_row(
                    format!("recv:{lane}"),
                    vec![(xc, 1.0), (map.site_var(VarKind::Y, b, t), -m)],
                    Relation::Le,
                    0.0,
                );
                inst.add_row(
                    format!("one_way:{lane}"),
                    vec![(xc, 1.0), (map.site_var(VarKind::Y, a, t), m)],
                    Relation::Le,
                    m,
                );
                inst.add_row(format!("lane_on:{lane}"), vec![(xc, 1.0), (wc, -m)], Relation::Le, 0.0);
                inst.add_row(format!("lane_min:{lane}"), vec![(xc, 1.0), (wc, -q)], Relation::Ge, 0.0);
                inst.add_row(
                    format!("lane_flag:{lane}"),
                    vec![(map.site_var(VarKind::Z, a, t), 1.0), (wc, -1.0)],
                    Relation::Ge,
                    0.0,
                );
            }
            for i in 0..n {
                let mut coefs: Vec<(usize, f64)> =
                    (0..n).filter(|j| *j != i).map(|j| (map.x(i, j, t).unwrap(), 1.0)).collect();
                coefs.push((map.site_var(VarKind::Z, i, t), -m));
                inst.add_row(format!("ship_flag:i={},t={wk}", s.sites[i]), coefs, Relation::Le, 0.0);
            }
        }

        for i in 0..n {
            let tag = format!("i={},t={wk}", s.sites[i]);
            inst.add_row(
                format!("net_split:{tag}"),
                vec![
                    (map.site_var(VarKind::I, i, t), 1.0),
                    (map.site_var(VarKind::IP, i, t), -1.0),
                    (map.site_var(VarKind::IM, i, t), 1.0),
                ],
                Relation::Eq,
                0.0,
            );
            inst.add_row(
                format!("ss_split:{tag}"),
                vec![
                    (map.site_var(VarKind::IP, i, t), 1.0),
                    (map.site_var(VarKind::IS, i, t), -1.0),
                    (map.site_var(VarKind::IE, i, t), -1.0),
                ],
                Relation::Eq,
                0.0,
            );
        }
    }
    Ok((inst, map))
}

/// Canonical split of net inventory `inv` against safety stock `ss`:
/// `(IP, IM, IS, IE)`.
pub fn canonical_decompose(inv: f64, ss: f64) -> (f64, f64, f64, f64) {
    let ip = inv.max(0.0);
    let im = (-inv).max(0.0);
    let is = ip.min(ss);
    (ip, im, is, ip - is)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transfer {
    pub src: String,
    pub dst: String,
    pub week: u32,
    pub qty: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_solves: u64,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSolution {
    pub item: String,
    pub status: SolveStatus,
    #[serde(with = "crate::float_serde")]
    pub objective: f64,
    #[serde(with = "crate::float_serde")]
    pub best_bound: f64,
    #[serde(with = "crate::float_serde")]
    pub gap: f64,
    pub sites: Vec<String>,
    pub weeks: Vec<u32>,
    /// Non-zero lanes only, ordered by week, source, destination.
    pub transfers: Vec<Transfer>,
    /// `[site][week]` tables; empty when no incumbent exists.
    pub inventory: Vec<Vec<f64>>,
    pub ip: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    pub is: Vec<Vec<f64>>,
    pub ie: Vec<Vec<f64>>,
    pub y: Vec<Vec<bool>>,
    pub z: Vec<Vec<bool>>,
    pub stats: SolveStats,
}

impl PlanSolution {
    pub fn has_plan(&self) -> bool {
        !self.inventory.is_empty()
    }

    pub fn total_units(&self) -> f64 {
        self.transfers.iter().map(|t| t.qty).sum()
    }
}

/// Snaps lanes, rounds binaries, canonicalizes the decomposition and checks
/// every row of `inst` against the cleaned vector.
pub fn canonical_values(
    s: &Scenario,
    inst: &MilpInstance,
    map: &VarMap,
    values: &[f64],
) -> Result<Vec<f64>, ModelError> {
    if values.len() != inst.num_cols() {
        return Err(ModelError::WrongLength { expected: inst.num_cols(), found: values.len() });
    }
    let mut v = values.to_vec();
    for e in map.entries() {
        let c = e.column;
        match e.kind {
            VarKind::X => {
                if v[c] < SNAP_TOL {
                    v[c] = 0.0;
                }
            }
            VarKind::W | VarKind::Y | VarKind::Z => v[c] = if v[c] > 0.5 { 1.0 } else { 0.0 },
            _ => {}
        }
    }
    for i in 0..s.num_sites() {
        for t in 0..s.num_weeks() {
            let inv = v[map.site_var(VarKind::I, i, t)];
            let (ip, im, is, ie) = canonical_decompose(inv, s.safety_stock[i][t]);
            v[map.site_var(VarKind::IP, i, t)] = ip;
            v[map.site_var(VarKind::IM, i, t)] = im;
            v[map.site_var(VarKind::IS, i, t)] = is;
            v[map.site_var(VarKind::IE, i, t)] = ie;
        }
    }
    let (viol, row) = inst.max_row_violation(&v);
    if viol > FEASIBILITY_TOL {
        return Err(ModelError::Integrity {
            row: row.map(|r| inst.rows[r].label.clone()).unwrap_or_default(),
            violation: viol,
        });
    }
    let col_viol = inst.max_column_violation(&v);
    if col_viol > FEASIBILITY_TOL {
        return Err(ModelError::Integrity { row: "column bounds".into(), violation: col_viol });
    }
    Ok(v)
}

pub fn extract_solution(
    s: &Scenario,
    inst: &MilpInstance,
    map: &VarMap,
    result: &MilpResult,
) -> Result<PlanSolution, ModelError> {
    let mut plan = PlanSolution {
        item: s.item.clone(),
        status: result.status,
        objective: result.objective,
        best_bound: result.best_bound,
        gap: result.gap,
        sites: s.sites.clone(),
        weeks: s.weeks.clone(),
        transfers: Vec::new(),
        inventory: Vec::new(),
        ip: Vec::new(),
        im: Vec::new(),
        is: Vec::new(),
        ie: Vec::new(),
        y: Vec::new(),
        z: Vec::new(),
        stats: SolveStats { nodes: result.nodes, lp_solves: result.lp_solves, wall_time_secs: result.wall_time_secs },
    };
    if !result.has_incumbent() {
        return Ok(plan);
    }
    let v = canonical_values(s, inst, map, &result.values)?;
    plan.objective = inst.objective_value(&v);
    let (n, nw) = (s.num_sites(), s.num_weeks());
    for t in 0..nw {
        for (a, b) in map.lanes() {
            let q = v[map.x(a, b, t).unwrap()];
            if q > 0.0 {
                plan.transfers.push(Transfer {
                    src: s.sites[a].clone(),
                    dst: s.sites[b].clone(),
                    week: s.weeks[t],
                    qty: q,
                });
            }
        }
    }
    let table =
        |kind| -> Vec<Vec<f64>> { (0..n).map(|i| (0..nw).map(|t| v[map.site_var(kind, i, t)]).collect()).collect() };
    let flags = |kind| -> Vec<Vec<bool>> {
        (0..n).map(|i| (0..nw).map(|t| v[map.site_var(kind, i, t)] > 0.5).collect()).collect()
    };
    plan.inventory = table(VarKind::I);
    plan.ip = table(VarKind::IP);
    plan.im = table(VarKind::IM);
    plan.is = table(VarKind::IS);
    plan.ie = table(VarKind::IE);
    plan.y = flags(VarKind::Y);
    plan.z = flags(VarKind::Z);
    Ok(plan)
}

/// Builds, solves and extracts the plan for one scenario.
pub fn solve_plan(s: &Scenario, opts: &SolverOptions) -> Result<PlanSolution, ModelError> {
    solve_plan_with_progress(s, opts, &mut |_| {})
}

pub fn solve_plan_with_progress(
    s: &Scenario,
    opts: &SolverOptions,
    progress: &mut dyn FnMut(&Progress),
) -> Result<PlanSolution, ModelError> {
    let (inst, map) = build_model(s)?;
    let result = solve_milp_with_progress(&inst, opts, progress)?;
    extract_solution(s, &inst, &map, &result)
}
