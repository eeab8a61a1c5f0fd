use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::context::{EngineeredContext, Level, Metric, Role, WeekRange};
use super::ReportError;
use crate::config::NetworkConfig;
use crate::network::NetworkPlan;
use crate::sim::{weeks_of_supply, InventoryPath, Savings, WeeklySaving};

/// Everything persisted for one planning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub run_id: String,
    pub config: NetworkConfig,
    pub plan: NetworkPlan,
}

pub trait RunStore {
    fn load(&self, run_id: &str) -> Option<RunArtifacts>;
}

impl RunStore for HashMap<String, RunArtifacts> {
    fn load(&self, run_id: &str) -> Option<RunArtifacts> {
        self.get(run_id).cloned()
    }
}

impl RunStore for RunArtifacts {
    fn load(&self, run_id: &str) -> Option<RunArtifacts> {
        (self.run_id == run_id).then(|| self.clone())
    }
}

/// Label of the group that `(item, site)` falls into at `level`.
pub fn group_label(cfg: &NetworkConfig, level: Level, item: &str, site: &str) -> String {
    match level {
        Level::Item if cfg.items.len() <= 1 => site.to_string(),
        Level::Item => format!("{item}@{site}"),
        Level::Family => format!("{}@{site}", cfg.family_of(item)),
        Level::Region => cfg.region_of(site),
    }
}

/// Summed ledger columns of one group. WOS is recomputed from the summed
/// inventory and demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSeries {
    pub group: String,
    pub members: Vec<String>,
    pub weeks: Vec<u32>,
    pub demand: Vec<f64>,
    pub receipts: Vec<f64>,
    pub transfer_in: Vec<f64>,
    pub transfer_out: Vec<f64>,
    pub inventory: Vec<f64>,
    pub sim_inv: Vec<f64>,
    pub wos: Vec<f64>,
    pub sim_wos: Vec<f64>,
    pub inv_cost: Vec<f64>,
    pub sim_inv_cost: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTransfer {
    pub src: String,
    pub dst: String,
    pub week: u32,
    pub qty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStockout {
    pub group: String,
    pub week: u32,
    pub magnitude: f64,
    pub path: InventoryPath,
}

/// Immutable snapshot handed to the renderer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportData {
    pub run_id: String,
    pub role: Role,
    pub level: Level,
    pub metrics: Vec<Metric>,
    pub weeks: Vec<u32>,
    /// Weeks in range with non-zero network transfers.
    pub transfer_weeks: Vec<u32>,
    pub series: Vec<GroupSeries>,
    pub transfers: Vec<GroupTransfer>,
    pub stockouts: Vec<GroupStockout>,
    pub savings: Savings,
    pub total_units: f64,
    pub total_savings: f64,
}

fn add(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

/// Group series over the full horizon for the given sites.
pub fn aggregate_series(run: &RunArtifacts, level: Level, sites: &[String]) -> Vec<GroupSeries> {
    let cfg = &run.config;
    let weeks = cfg.horizon.clone();
    let nw = weeks.len();
    let mut out: Vec<GroupSeries> = Vec::new();
    for item in &run.plan.items {
        for s in &item.ledger.sites {
            if !sites.contains(&s.site) {
                continue;
            }
            let g = group_label(cfg, level, &item.plan.item, &s.site);
            let idx = match out.iter().position(|x| x.group == g) {
                Some(i) => i,
                None => {
                    out.push(GroupSeries {
                        group: g.clone(),
                        members: Vec::new(),
                        weeks: weeks.clone(),
                        demand: vec![0.0; nw],
                        receipts: vec![0.0; nw],
                        transfer_in: vec![0.0; nw],
                        transfer_out: vec![0.0; nw],
                        inventory: vec![0.0; nw],
                        sim_inv: vec![0.0; nw],
                        wos: vec![0.0; nw],
                        sim_wos: vec![0.0; nw],
                        inv_cost: vec![0.0; nw],
                        sim_inv_cost: vec![0.0; nw],
                    });
                    out.len() - 1
                }
            };
            let gs = &mut out[idx];
            if !gs.members.contains(&s.site) {
                gs.members.push(s.site.clone());
            }
            add(&mut gs.demand, &s.demand);
            add(&mut gs.receipts, &s.receipts);
            add(&mut gs.transfer_in, &s.transfer_in);
            add(&mut gs.transfer_out, &s.transfer_out);
            add(&mut gs.inventory, &s.inventory);
            add(&mut gs.sim_inv, &s.sim_inv);
            add(&mut gs.inv_cost, &s.inv_cost);
            add(&mut gs.sim_inv_cost, &s.sim_inv_cost);
        }
    }
    let window = cfg.kpi.wos_window;
    for gs in &mut out {
        let future = |t: usize| &gs.demand[(t + 1).min(nw)..(t + 1 + window).min(nw)];
        let wos: Vec<f64> = (0..nw).map(|t| weeks_of_supply(gs.inventory[t], future(t))).collect();
        let sim_wos: Vec<f64> = (0..nw).map(|t| weeks_of_supply(gs.sim_inv[t], future(t))).collect();
        gs.wos = wos;
        gs.sim_wos = sim_wos;
    }
    out
}

/// Group series for every site over the full horizon.
pub fn kpis_by_level(run: &RunArtifacts, level: Level) -> Vec<GroupSeries> {
    aggregate_series(run, level, &run.config.site_ids())
}

fn slice_weeks(gs: &mut GroupSeries, range: WeekRange) {
    let keep: Vec<usize> = (0..gs.weeks.len()).filter(|&t| range.contains(gs.weeks[t])).collect();
    let pick = |v: &Vec<f64>| keep.iter().map(|&t| v[t]).collect::<Vec<f64>>();
    gs.demand = pick(&gs.demand);
    gs.receipts = pick(&gs.receipts);
    gs.transfer_in = pick(&gs.transfer_in);
    gs.transfer_out = pick(&gs.transfer_out);
    gs.inventory = pick(&gs.inventory);
    gs.sim_inv = pick(&gs.sim_inv);
    gs.wos = pick(&gs.wos);
    gs.sim_wos = pick(&gs.sim_wos);
    gs.inv_cost = pick(&gs.inv_cost);
    gs.sim_inv_cost = pick(&gs.sim_inv_cost);
    gs.weeks = keep.iter().map(|&t| gs.weeks[t]).collect();
}

/// Network savings merged across items, restricted to `range`.
fn merged_savings(run: &RunArtifacts, range: WeekRange) -> Savings {
    let mut weekly: Vec<WeeklySaving> = Vec::new();
    for item in &run.plan.items {
        for w in &item.savings.weekly {
            if !range.contains(w.week) {
                continue;
            }
            match weekly.iter_mut().find(|x| x.week == w.week) {
                Some(x) => {
                    x.units += w.units;
                    x.sim_inv_cost += w.sim_inv_cost;
                    x.inv_cost += w.inv_cost;
                    x.savings += w.savings;
                }
                None => weekly.push(w.clone()),
            }
        }
    }
    weekly.sort_by_key(|w| w.week);
    Savings {
        total_units: weekly.iter().map(|w| w.units).sum(),
        total_savings: weekly.iter().map(|w| w.savings).sum(),
        weekly,
    }
}

/// Pulls the series, transfers, stockouts and savings named by the context's
/// manifest, aggregated to the context's level. Series are always included.
/// Site filters apply to series, transfers and stockouts; savings always
/// cover the whole network.
pub fn gather_data(ctx: &EngineeredContext, store: &dyn RunStore) -> Result<ReportData, ReportError> {
    let run = store.load(&ctx.request.run_id).ok_or_else(|| ReportError::RunNotFound(ctx.request.run_id.clone()))?;
    let role = ctx.role.ok_or_else(|| ReportError::BadRequest("context has no role".into()))?;
    let cfg = &run.config;
    let level = ctx.level;
    let range = ctx.request.weeks.unwrap_or(WeekRange { from: cfg.horizon[0], to: *cfg.horizon.last().unwrap_or(&0) });
    let sites = if ctx.request.sites.is_empty() { cfg.site_ids() } else { ctx.request.sites.clone() };

    let mut series = aggregate_series(&run, level, &sites);
    for gs in &mut series {
        slice_weeks(gs, range);
    }
    let order: Vec<String> = series.iter().map(|g| g.group.clone()).collect();
    let rank = |g: &str| order.iter().position(|x| x == g).unwrap_or(usize::MAX);

    let mut transfers: Vec<GroupTransfer> = Vec::new();
    for item in &run.plan.items {
        for t in &item.plan.transfers {
            if !range.contains(t.week) || !(sites.contains(&t.src) || sites.contains(&t.dst)) {
                continue;
            }
            let src = group_label(cfg, level, &item.plan.item, &t.src);
            let dst = group_label(cfg, level, &item.plan.item, &t.dst);
            match transfers.iter_mut().find(|x| x.src == src && x.dst == dst && x.week == t.week) {
                Some(x) => x.qty += t.qty,
                None => transfers.push(GroupTransfer { src, dst, week: t.week, qty: t.qty }),
            }
        }
    }
    transfers.sort_by(|a, b| {
        (a.week, rank(&a.src), rank(&a.dst), &a.src, &a.dst).cmp(&(b.week, rank(&b.src), rank(&b.dst), &b.src, &b.dst))
    });

    let mut stockouts: Vec<GroupStockout> = Vec::new();
    for item in &run.plan.items {
        for e in &item.stockouts {
            if !range.contains(e.week) || !sites.contains(&e.site) {
                continue;
            }
            let group = group_label(cfg, level, &item.plan.item, &e.site);
            match stockouts.iter_mut().find(|x| x.group == group && x.week == e.week && x.path == e.path) {
                Some(x) => x.magnitude += e.magnitude,
                None => stockouts.push(GroupStockout { group, week: e.week, magnitude: e.magnitude, path: e.path }),
            }
        }
    }
    stockouts.sort_by_key(|e| (e.week, rank(&e.group), e.path));

    let metrics: Vec<Metric> = ctx.request.metrics.clone();
    let wants = |m: Metric| metrics.is_empty() || metrics.contains(&m);
    let mut transfer_weeks: Vec<u32> = run
        .plan
        .items
        .iter()
        .flat_map(|i| i.plan.transfers.iter().filter(|t| t.qty > 0.0).map(|t| t.week))
        .filter(|w| range.contains(*w))
        .collect();
    transfer_weeks.sort_unstable();
    transfer_weeks.dedup();
    if !wants(Metric::Transfers) {
        transfers.clear();
    }
    if !wants(Metric::Stockouts) {
        stockouts.clear();
    }
    let savings = if wants(Metric::Costs) { merged_savings(&run, range) } else { Savings::default() };
    let total_units = transfers.iter().map(|t| t.qty).sum();
    let total_savings = savings.total_savings;
    let weeks = cfg.horizon.iter().copied().filter(|w| range.contains(*w)).collect();
    Ok(ReportData {
        run_id: run.run_id.clone(),
        role,
        level,
        metrics: if metrics.is_empty() { Metric::ALL.to_vec() } else { metrics },
        weeks,
        transfer_weeks,
        series,
        transfers,
        stockouts,
        savings,
        total_units,
        total_savings,
    })
}
