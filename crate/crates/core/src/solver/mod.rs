//! Exact MILP solver: two-phase bounded simplex for relaxations,
//! best-first branch-and-bound for integrality, and a brute-force
//! enumeration oracle for small binary instances.

mod bnb;
mod brute;
mod simplex;

use serde::{Deserialize, Serialize};

pub use bnb::{solve_milp, solve_milp_with_progress, Progress};
pub use brute::{brute_force_milp, BRUTE_FORCE_LIMIT};

use crate::error::SolverError;
use crate::instance::MilpInstance;
use simplex::{Outcome, Tableau};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpResult {
    pub status: LpStatus,
    /// Objective in the instance's sense; meaningful only when optimal.
    pub objective: f64,
    pub primal: Vec<f64>,
    /// One dual per row, in the instance's sense.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// Dual objective `y.b` plus bound terms; equals `objective` at optimality.
    pub dual_objective: f64,
    /// Row multipliers proving infeasibility, when phase 1 produced them:
    /// `y.b` exceeds the maximum of `y.(A x + s)` over the column and slack
    /// boxes.
    pub farkas: Option<Vec<f64>>,
    pub iterations: usize,
}

impl LpResult {
    fn empty(status: LpStatus, iterations: usize) -> Self {
        Self {
            status,
            objective: f64::NAN,
            primal: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            dual_objective: f64::NAN,
            farkas: None,
            iterations,
        }
    }
}

/// Solves the linear relaxation of `instance` (integrality flags ignored).
pub fn solve_lp(instance: &MilpInstance) -> Result<LpResult, SolverError> {
    instance.check()?;
    let lb: Vec<f64> = instance.columns.iter().map(|c| c.lower).collect();
    let ub: Vec<f64> = instance.columns.iter().map(|c| c.upper).collect();
    solve_lp_bounded(instance, &lb, &ub)
}

pub(crate) fn solve_lp_bounded(instance: &MilpInstance, lb: &[f64], ub: &[f64]) -> Result<LpResult, SolverError> {
    let mut tab = Tableau::new(instance, lb, ub);
    let outcome = tab.solve()?;
    Ok(lp_result_from(&mut tab, outcome))
}

fn lp_result_from(tab: &mut Tableau, outcome: Outcome) -> LpResult {
    match outcome {
        Outcome::Optimal => {
            tab.refresh_values();
            let dual = tab.dual_solution();
            LpResult {
                status: LpStatus::Optimal,
                objective: tab.objective(),
                primal: tab.structural_values(),
                duals: dual.row_duals,
                reduced_costs: dual.reduced_costs,
                dual_objective: dual.objective,
                farkas: None,
                iterations: tab.iterations,
            }
        }
        Outcome::Infeasible => {
            let mut r = LpResult::empty(LpStatus::Infeasible, tab.iterations);
            let y = tab.farkas();
            if y.iter().any(|v| *v != 0.0) {
                r.farkas = Some(y);
            }
            r
        }
        Outcome::Unbounded => LpResult::empty(LpStatus::Unbounded, tab.iterations),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchingRule {
    MostFractional,
    PseudoCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchOrder {
    BestFirst,
    /// Best-first with a depth-first plunge every eight nodes.
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub rel_gap: f64,
    pub abs_gap: f64,
    pub time_limit_secs: f64,
    pub node_limit: u64,
    pub branching: BranchingRule,
    pub search: SearchOrder,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_gap: 1e-6,
            abs_gap: 1e-9,
            time_limit_secs: 300.0,
            node_limit: 1_000_000,
            branching: BranchingRule::MostFractional,
            search: SearchOrder::Hybrid,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.rel_gap.is_nan() || self.rel_gap < 0.0 || self.abs_gap.is_nan() || self.abs_gap < 0.0 {
            return Err(SolverError::InvalidOptions("gap targets must be >= 0".into()));
        }
        if self.time_limit_secs.is_nan() || self.time_limit_secs < 1.0 {
            return Err(SolverError::InvalidOptions("time limit must be >= 1 s".into()));
        }
        if self.node_limit < 1 {
            return Err(SolverError::InvalidOptions("node limit must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Stopped at the node limit with an incumbent whose gap exceeds the target.
    FeasibleWithGap,
    Infeasible,
    Unbounded,
    /// Stopped by the time limit, or by the node limit before any incumbent.
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpResult {
    pub status: SolveStatus,
    /// Incumbent values; empty when no incumbent exists.
    pub values: Vec<f64>,
    pub objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: u64,
    pub lp_solves: u64,
    pub wall_time_secs: f64,
}

impl MilpResult {
    pub fn has_incumbent(&self) -> bool {
        !self.values.is_empty()
    }
}

/// `(bound - incumbent) / max(1, |incumbent|)` in maximization orientation.
pub fn relative_gap(bound: f64, incumbent: f64) -> f64 {
    ((bound - incumbent) / incumbent.abs().max(1.0)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Relation, Sense};

    fn box_lp() -> MilpInstance {
        let mut inst = MilpInstance::new(Sense::Maximize);
        let x = inst.add_column("x", 0.0, 10.0, false, 1.0);
        let y = inst.add_column("y", 0.0, 10.0, false, 1.0);
        inst.add_row("cx", vec![(x, 1.0)], Relation::Le, 2.0);
        inst.add_row("cy", vec![(y, 1.0)], Relation::Le, 3.0);
        inst
    }

    #[test]
    fn textbook_lp() {
        let r = solve_lp(&box_lp()).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 5.0).abs() < 1e-12);
        assert!((r.primal[0] - 2.0).abs() < 1e-12);
        assert!((r.primal[1] - 3.0).abs() < 1e-12);
        assert!((r.duals[0] - 1.0).abs() < 1e-12);
        assert!((r.dual_objective - r.objective).abs() < 1e-12);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut inst = MilpInstance::new(Sense::Maximize);
        let x = inst.add_column("x", 0.0, 100.0, false, 1.0);
        inst.add_row("neg", vec![(x, 1.0)], Relation::Le, -1.0);
        let r = solve_lp(&inst).unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
        let y = r.farkas.expect("certificate");
        // y.b must exceed max over the box of y.(x + s), s in [0, inf).
        assert!(y[0] < 0.0);
        let lhs_max = (y[0] * 0.0_f64).max(y[0] * 100.0);
        assert!(-y[0] > lhs_max);

        let mut crossed = MilpInstance::new(Sense::Maximize);
        crossed.add_column("x", 0.0, -1.0, false, 1.0);
        assert_eq!(solve_lp(&crossed).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn minimize_with_ge_and_eq_rows() {
        // min 2a + 3b  s.t. a + b >= 4, a - b = 1, a,b in [0, 10] -> a=2.5, b=1.5
        let mut inst = MilpInstance::new(Sense::Minimize);
        let a = inst.add_column("a", 0.0, 10.0, false, 2.0);
        let b = inst.add_column("b", 0.0, 10.0, false, 3.0);
        inst.add_row("cover", vec![(a, 1.0), (b, 1.0)], Relation::Ge, 4.0);
        inst.add_row("diff", vec![(a, 1.0), (b, -1.0)], Relation::Eq, 1.0);
        let r = solve_lp(&inst).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 9.5).abs() < 1e-10);
        assert!((r.primal[0] - 2.5).abs() < 1e-10);
        assert!((r.dual_objective - r.objective).abs() < 1e-10);
    }

    #[test]
    fn negative_lower_bounds() {
        // max -x with x in [-5, 3] and x >= -2 -> x = -2
        let mut inst = MilpInstance::new(Sense::Maximize);
        let x = inst.add_column("x", -5.0, 3.0, false, -1.0);
        inst.add_row("floor", vec![(x, 1.0)], Relation::Ge, -2.0);
        let r = solve_lp(&inst).unwrap();
        assert!((r.primal[0] + 2.0).abs() < 1e-12);
        assert!((r.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn options_validation() {
        assert!(SolverOptions::default().validate().is_ok());
        let bad = SolverOptions { rel_gap: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SolverOptions { node_limit: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
