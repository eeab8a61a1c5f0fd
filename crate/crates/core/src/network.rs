//! Whole-network planning: every item solved independently, replayed
//! through the simulator and summarized.

use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::ModelError;
use crate::model::{solve_plan_with_progress, PlanSolution};
use crate::sim::{compute_savings, detect_stockouts, simulate, LedgerSeries, Savings, StockoutEvent};
use crate::solver::{Progress, SolveStatus, SolverOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemPlan {
    pub plan: PlanSolution,
    pub ledger: LedgerSeries,
    pub savings: Savings,
    pub stockouts: Vec<StockoutEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkPlan {
    /// Least favourable item status.
    pub status: SolveStatus,
    #[serde(with = "crate::float_serde")]
    pub objective: f64,
    /// Largest item gap.
    #[serde(with = "crate::float_serde")]
    pub gap: f64,
    pub total_units: f64,
    pub total_savings: f64,
    pub items: Vec<ItemPlan>,
}

impl NetworkPlan {
    pub fn item(&self, id: &str) -> Option<&ItemPlan> {
        self.items.iter().find(|i| i.plan.item == id)
    }
}

fn severity(s: SolveStatus) -> u8 {
    match s {
        SolveStatus::Optimal => 0,
        SolveStatus::FeasibleWithGap => 1,
        SolveStatus::TimeLimit => 2,
        SolveStatus::Infeasible => 3,
        SolveStatus::Unbounded => 4,
    }
}

pub fn plan_network(cfg: &NetworkConfig, opts: &SolverOptions) -> Result<NetworkPlan, ModelError> {
    plan_network_with_progress(cfg, opts, &mut |_, _| {})
}

/// Solves every item in declaration order. The progress callback receives
/// the item id with each solver snapshot.
pub fn plan_network_with_progress(
    cfg: &NetworkConfig,
    opts: &SolverOptions,
    progress: &mut dyn FnMut(&str, &Progress),
) -> Result<NetworkPlan, ModelError> {
    let mut items = Vec::new();
    for s in cfg.scenarios()? {
        let item = s.item.clone();
        let plan = solve_plan_with_progress(&s, opts, &mut |p| progress(&item, p))?;
        let ledger = simulate(&s, Some(&plan.transfers))?;
        let savings = compute_savings(&ledger);
        let stockouts = detect_stockouts(&ledger);
        items.push(ItemPlan { plan, ledger, savings, stockouts });
    }
    let status = items.iter().map(|i| i.plan.status).max_by_key(|s| severity(*s)).unwrap_or(SolveStatus::Optimal);
    Ok(NetworkPlan {
        status,
        objective: items.iter().map(|i| i.plan.objective).sum(),
        gap: items.iter().map(|i| i.plan.gap).fold(0.0, f64::max),
        total_units: items.iter().map(|i| i.savings.total_units).sum(),
        total_savings: items.iter().map(|i| i.savings.total_savings).sum(),
        items,
    })
}

/// Baseline projection for every item, without solving.
pub fn simulate_network(cfg: &NetworkConfig) -> Result<Vec<LedgerSeries>, ModelError> {
    cfg.scenarios()?.iter().map(|s| simulate(s, None).map_err(ModelError::from)).collect()
}
