use std::time::Instant;

use super::{relative_gap, solve_lp_bounded, LpStatus, MilpResult, SolveStatus};
use crate::error::SolverError;
use crate::instance::MilpInstance;

/// Maximum number of free binary columns [`brute_force_milp`] will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 20;

/// Exact reference solver: fixes every free binary column to each of the
/// `2^n` assignments and solves the remaining LP from scratch.
///
/// Integer columns whose bounds are already fixed do not count towards the
/// limit. Among equally good assignments the lowest bit pattern wins.
pub fn brute_force_milp(instance: &MilpInstance) -> Result<MilpResult, SolverError> {
    instance.check()?;
    let start = Instant::now();
    let mut free = Vec::new();
    for j in instance.integer_columns() {
        let c = &instance.columns[j];
        if c.lower < 0.0 || c.upper > 1.0 {
            return Err(SolverError::NonBinaryInteger(j));
        }
        if c.lower < c.upper {
            free.push(j);
        }
    }
    if free.len() > BRUTE_FORCE_LIMIT {
        return Err(SolverError::TooManyBinaries { limit: BRUTE_FORCE_LIMIT, found: free.len() });
    }

    let sign = -instance.sense.min_sign();
    let base_lb: Vec<f64> = instance.columns.iter().map(|c| c.lower).collect();
    let base_ub: Vec<f64> = instance.columns.iter().map(|c| c.upper).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut lp_solves = 0u64;
    let mut unbounded = false;

    for mask in 0u64..(1u64 << free.len()) {
        let mut lb = base_lb.clone();
        let mut ub = base_ub.clone();
        for (bit, &j) in free.iter().enumerate() {
            let v = ((mask >> bit) & 1) as f64;
            lb[j] = v;
            ub[j] = v;
        }
        lp_solves += 1;
        let lp = solve_lp_bounded(instance, &lb, &ub)?;
        match lp.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                unbounded = true;
                continue;
            }
            LpStatus::Optimal => {}
        }
        // Compare in maximization orientation.
        let score = sign * lp.objective;
        if best.as_ref().is_none_or(|(b, _)| score > *b + 1e-9) {
            best = Some((score, lp.primal));
        }
    }

    let wall = start.elapsed().as_secs_f64();
    Ok(match best {
        Some((score, values)) => MilpResult {
            status: if unbounded { SolveStatus::Unbounded } else { SolveStatus::Optimal },
            objective: sign * score,
            best_bound: sign * score,
            gap: relative_gap(score, score),
            values,
            nodes: 1u64 << free.len(),
            lp_solves,
            wall_time_secs: wall,
        },
        None => MilpResult {
            status: if unbounded { SolveStatus::Unbounded } else { SolveStatus::Infeasible },
            values: Vec::new(),
            objective: f64::NAN,
            best_bound: f64::NAN,
            gap: f64::INFINITY,
            nodes: 1u64 << free.len(),
            lp_solves,
            wall_time_secs: wall,
        },
    })
}
