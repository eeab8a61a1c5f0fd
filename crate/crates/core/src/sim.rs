//! Inventory projection with and without a transfer plan, plus the KPI
//! layer: weeks of supply, weekly costs, savings and stockout events.

use serde::{Deserialize, Serialize};

use crate::config::Scenario;
use crate::error::SimError;
use crate::model::Transfer;

/// Weeks-of-supply value used when there is no future demand to cover.
pub const WOS_SENTINEL: f64 = 999.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteSeries {
    pub site: String,
    pub demand: Vec<f64>,
    pub receipts: Vec<f64>,
    pub transfer_in: Vec<f64>,
    pub transfer_out: Vec<f64>,
    /// Projected inventory with the plan applied.
    pub inventory: Vec<f64>,
    /// Projected inventory without any transfers.
    pub sim_inv: Vec<f64>,
    pub wos: Vec<f64>,
    pub sim_wos: Vec<f64>,
    pub inv_cost: Vec<f64>,
    pub sim_inv_cost: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerSeries {
    pub item: String,
    pub weeks: Vec<u32>,
    pub sites: Vec<SiteSeries>,
}

/// One flat row of the tabular export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub item: String,
    pub site: String,
    pub week: u32,
    pub demand: f64,
    pub receipts: f64,
    pub transfer_in: f64,
    pub transfer_out: f64,
    pub inventory: f64,
    pub sim_inv: f64,
    pub wos: f64,
    pub sim_wos: f64,
    pub inv_cost: f64,
    pub sim_inv_cost: f64,
}

impl LedgerSeries {
    pub fn site(&self, id: &str) -> Option<&SiteSeries> {
        self.sites.iter().find(|s| s.site == id)
    }

    pub fn rows(&self) -> Vec<LedgerRow> {
        let mut out = Vec::with_capacity(self.sites.len() * self.weeks.len());
        for s in &self.sites {
            for (t, &week) in self.weeks.iter().enumerate() {
                out.push(LedgerRow {
                    item: self.item.clone(),
                    site: s.site.clone(),
                    week,
                    demand: s.demand[t],
                    receipts: s.receipts[t],
                    transfer_in: s.transfer_in[t],
                    transfer_out: s.transfer_out[t],
                    inventory: s.inventory[t],
                    sim_inv: s.sim_inv[t],
                    wos: s.wos[t],
                    sim_wos: s.sim_wos[t],
                    inv_cost: s.inv_cost[t],
                    sim_inv_cost: s.sim_inv_cost[t],
                });
            }
        }
        out
    }

    /// One row per site-week in a stable column order.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in self.rows() {
            w.serialize(row).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }

    pub fn total_transfers(&self) -> f64 {
        self.sites.iter().flat_map(|s| &s.transfer_out).sum()
    }
}

fn check_plan(s: &Scenario, plan: &[Transfer]) -> Result<Vec<(usize, usize, usize, f64)>, SimError> {
    plan.iter()
        .map(|tr| {
            let a = s.site_index(&tr.src).ok_or_else(|| SimError::UnknownSite(tr.src.clone()))?;
            let b = s.site_index(&tr.dst).ok_or_else(|| SimError::UnknownSite(tr.dst.clone()))?;
            let t = s.week_index(tr.week).ok_or(SimError::UnknownWeek(tr.week))?;
            if a == b {
                return Err(SimError::SelfTransfer(tr.src.clone()));
            }
            if !tr.qty.is_finite() || tr.qty < 0.0 {
                return Err(SimError::BadQuantity(tr.qty));
            }
            Ok((a, b, t, tr.qty))
        })
        .collect()
}

fn project(open: f64, receipts: &[f64], demand: &[f64], tin: &[f64], tout: &[f64]) -> Vec<f64> {
    let mut inv = open;
    (0..demand.len())
        .map(|t| {
            inv = inv + receipts[t] + tin[t] - tout[t] - demand[t];
            inv
        })
        .collect()
}

/// Projects both inventory paths and fills the KPI columns. The baseline
/// path ignores `plan`.
pub fn simulate(s: &Scenario, plan: Option<&[Transfer]>) -> Result<LedgerSeries, SimError> {
    let (n, nw) = (s.num_sites(), s.num_weeks());
    let mut tin = vec![vec![0.0; nw]; n];
    let mut tout = vec![vec![0.0; nw]; n];
    for (a, b, t, q) in check_plan(s, plan.unwrap_or(&[]))? {
        tout[a][t] += q;
        tin[b][t] += q;
    }
    let zero = vec![0.0; nw];
    let mut series = LedgerSeries {
        item: s.item.clone(),
        weeks: s.weeks.clone(),
        sites: (0..n)
            .map(|i| SiteSeries {
                site: s.sites[i].clone(),
                demand: s.demand[i].clone(),
                receipts: s.receipts[i].clone(),
                inventory: project(s.initial_inventory[i], &s.receipts[i], &s.demand[i], &tin[i], &tout[i]),
                sim_inv: project(s.initial_inventory[i], &s.receipts[i], &s.demand[i], &zero, &zero),
                transfer_in: std::mem::take(&mut tin[i]),
                transfer_out: std::mem::take(&mut tout[i]),
                wos: Vec::new(),
                sim_wos: Vec::new(),
                inv_cost: Vec::new(),
                sim_inv_cost: Vec::new(),
            })
            .collect(),
    };
    compute_wos(&mut series, s.wos_window);
    compute_costs(&mut series, &s.c_hold, &s.shortage_penalty);
    Ok(series)
}

/// Positive inventory over the mean demand of the following `demand`
/// window. Non-positive inventory has zero cover.
pub fn weeks_of_supply(inv: f64, window: &[f64]) -> f64 {
    if inv <= 0.0 {
        return 0.0;
    }
    if window.is_empty() {
        return WOS_SENTINEL;
    }
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    if mean < 1e-9 {
        WOS_SENTINEL
    } else {
        inv / mean
    }
}

/// Fills `wos` and `sim_wos` using the demand of weeks `t+1 ..= t+window`,
/// truncated at the horizon.
pub fn compute_wos(series: &mut LedgerSeries, window: usize) {
    let nw = series.weeks.len();
    for s in &mut series.sites {
        let future = |t: usize| &s.demand[(t + 1).min(nw)..(t + 1 + window).min(nw)];
        s.wos = (0..nw).map(|t| weeks_of_supply(s.inventory[t], future(t))).collect();
        s.sim_wos = (0..nw).map(|t| weeks_of_supply(s.sim_inv[t], future(t))).collect();
    }
}

pub fn inventory_cost(inv: f64, c_hold: f64, penalty: f64) -> f64 {
    c_hold * inv.max(0.0) + penalty * (-inv).max(0.0)
}

/// Holding cost on positive inventory plus the shortage penalty on
/// backlog, for both paths.
pub fn compute_costs(series: &mut LedgerSeries, c_hold: &[f64], penalty: &[Vec<f64>]) {
    for (i, s) in series.sites.iter_mut().enumerate() {
        s.inv_cost =
            s.inventory.iter().enumerate().map(|(t, v)| inventory_cost(*v, c_hold[i], penalty[i][t])).collect();
        s.sim_inv_cost =
            s.sim_inv.iter().enumerate().map(|(t, v)| inventory_cost(*v, c_hold[i], penalty[i][t])).collect();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklySaving {
    pub week: u32,
    pub units: f64,
    /// Baseline and planned cost over the sites that improved this week.
    pub sim_inv_cost: f64,
    pub inv_cost: f64,
    pub savings: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Savings {
    pub weekly: Vec<WeeklySaving>,
    pub total_units: f64,
    pub total_savings: f64,
}

/// Savings over the weeks that move stock: per week, the sum over sites of
/// the positive part of `sim_inv_cost - inv_cost`.
pub fn compute_savings(series: &LedgerSeries) -> Savings {
    let mut out = Savings::default();
    for (t, &week) in series.weeks.iter().enumerate() {
        let units: f64 = series.sites.iter().map(|s| s.transfer_out[t]).sum();
        if units <= 0.0 {
            continue;
        }
        let mut row = WeeklySaving { week, units, sim_inv_cost: 0.0, inv_cost: 0.0, savings: 0.0 };
        for s in &series.sites {
            let (sim, inv) = (s.sim_inv_cost[t], s.inv_cost[t]);
            if sim > inv {
                row.sim_inv_cost += sim;
                row.inv_cost += inv;
                row.savings += sim - inv;
            }
        }
        out.total_units += units;
        out.total_savings += row.savings;
        out.weekly.push(row);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InventoryPath {
    Baseline,
    Planned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockoutEvent {
    pub site: String,
    pub week: u32,
    pub magnitude: f64,
    pub path: InventoryPath,
}

/// Negative-inventory weeks on both paths, ordered by week, then site in
/// declaration order, then baseline before planned.
pub fn detect_stockouts(series: &LedgerSeries) -> Vec<StockoutEvent> {
    let mut out = Vec::new();
    for (t, &week) in series.weeks.iter().enumerate() {
        for s in &series.sites {
            for (path, inv) in [(InventoryPath::Baseline, s.sim_inv[t]), (InventoryPath::Planned, s.inventory[t])] {
                if inv < 0.0 {
                    out.push(StockoutEvent { site: s.site.clone(), week, magnitude: -inv, path });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_site() -> Scenario {
        Scenario {
            item: "X".into(),
            sites: vec!["A".into()],
            weeks: vec![1, 2],
            frozen_weeks: 0,
            demand: vec![vec![3.0, 4.0]],
            receipts: vec![vec![0.0, 2.0]],
            initial_inventory: vec![12.0],
            safety_stock: vec![vec![0.0; 2]],
            ss_benefit: vec![vec![0.0; 2]],
            shortage_penalty: vec![vec![100.0; 2]],
            fixed_ship_cost: vec![vec![0.0; 2]],
            min_ship_qty: 0.0,
            c_hold: vec![2.0],
            wos_window: 4,
        }
    }

    #[test]
    fn recurrence() {
        let l = simulate(&one_site(), None).unwrap();
        assert_eq!(l.sites[0].sim_inv, vec![9.0, 7.0]);
        assert_eq!(l.sites[0].inventory, l.sites[0].sim_inv);
        assert_eq!(l.sites[0].inv_cost, vec![18.0, 14.0]);
    }

    #[test]
    fn wos_cases() {
        assert_eq!(weeks_of_supply(40.0, &[10.0; 4]), 4.0);
        assert_eq!(weeks_of_supply(40.0, &[0.0; 4]), WOS_SENTINEL);
        assert_eq!(weeks_of_supply(40.0, &[]), WOS_SENTINEL);
        assert_eq!(weeks_of_supply(-3.0, &[10.0]), 0.0);
        assert_eq!(weeks_of_supply(0.0, &[0.0]), 0.0);
        assert_eq!(weeks_of_supply(30.0, &[10.0, 20.0]), 2.0);
    }

    #[test]
    fn cost_cases() {
        assert_eq!(inventory_cost(10.0, 2.0, 100.0), 20.0);
        assert_eq!(inventory_cost(-5.0, 2.0, 100.0), 500.0);
    }

    #[test]
    fn plan_errors() {
        let s = one_site();
        let tr = |src: &str, dst: &str, week, qty| Transfer { src: src.into(), dst: dst.into(), week, qty };
        assert_eq!(simulate(&s, Some(&[tr("A", "Q", 1, 1.0)])), Err(SimError::UnknownSite("Q".into())));
        assert_eq!(simulate(&s, Some(&[tr("A", "A", 1, 1.0)])), Err(SimError::SelfTransfer("A".into())));
        assert_eq!(simulate(&s, Some(&[tr("A", "A", 9, 1.0)])), Err(SimError::UnknownWeek(9)));
    }

    #[test]
    fn savings_single_row() {
        let series = LedgerSeries {
            item: "X".into(),
            weeks: vec![1, 2],
            sites: vec![SiteSeries {
                site: "A".into(),
                demand: vec![0.0; 2],
                receipts: vec![0.0; 2],
                transfer_in: vec![0.0; 2],
                transfer_out: vec![5.0, 0.0],
                inventory: vec![0.0; 2],
                sim_inv: vec![0.0; 2],
                wos: vec![0.0; 2],
                sim_wos: vec![0.0; 2],
                inv_cost: vec![100.0, 50.0],
                sim_inv_cost: vec![1000.0, 900.0],
            }],
        };
        let sv = compute_savings(&series);
        assert_eq!(sv.weekly.len(), 1);
        assert_eq!(sv.weekly[0].savings, 900.0);
        assert_eq!(sv.total_units, 5.0);

        let empty = compute_savings(&simulate(&one_site(), None).unwrap());
        assert!(empty.weekly.is_empty());
        assert_eq!((empty.total_units, empty.total_savings), (0.0, 0.0));
    }

    #[test]
    fn stockouts_sorted() {
        let mut s = one_site();
        s.initial_inventory = vec![2.0];
        let l = simulate(&s, None).unwrap();
        let ev = detect_stockouts(&l);
        assert_eq!(ev.len(), 4);
        assert_eq!((ev[0].week, ev[0].magnitude, ev[0].path), (1, 1.0, InventoryPath::Baseline));
        assert_eq!(ev[1].path, InventoryPath::Planned);
        assert_eq!(ev[3].magnitude, 3.0);
    }

    #[test]
    fn csv_export() {
        let csv = simulate(&one_site(), None).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "item,site,week,demand,receipts,transfer_in,transfer_out,inventory,sim_inv,wos,sim_wos,inv_cost,sim_inv_cost"
        );
        assert_eq!(lines.next().unwrap(), "X,A,1,3.0,0.0,0.0,0.0,9.0,9.0,2.25,2.25,18.0,18.0");
    }
}
