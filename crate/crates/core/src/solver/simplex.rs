//! Dense bounded-variable simplex.
//!
//! Every row gets a slack column so that the system reads
//! `A x + s = b` with box bounds on `x` and `s`; the relation of a row is
//! expressed through the bounds of its slack. Phase 1 adds one artificial per
//! row whose starting slack falls outside its box and minimizes their sum.
//! Phase 2 runs primal simplex on the true costs. Branch-and-bound reuses a
//! solved tableau: changing a column bound keeps the basis dual feasible, and
//! the dual simplex restores primal feasibility.
//!
//! Internally everything is a minimization; callers flip signs for
//! maximization through [`Sense::min_sign`].

use crate::error::SolverError;
use crate::instance::{MilpInstance, Relation, Sense};

const PIVOT_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
pub(crate) const PRIMAL_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-7;
const DEGENERATE_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic with no finite bound, held at zero.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub(crate) struct Tableau {
    m: usize,
    /// Structural column count.
    n: usize,
    ncols: usize,
    /// Row-major `m x ncols` matrix `B^-1 [A I art]`.
    t: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    /// Phase-2 costs in minimization form.
    cost: Vec<f64>,
    /// Reduced costs for the active phase.
    d: Vec<f64>,
    /// Original right-hand sides.
    rhs: Vec<f64>,
    /// Original structural columns, sparse by column.
    cols: Vec<Vec<(usize, f64)>>,
    artificial_start: usize,
    bland: bool,
    degenerate: usize,
    pub(crate) iterations: usize,
    sense: Sense,
}

impl Tableau {
    /// Builds the starting tableau for `inst` with structural bounds
    /// overridden by `lb`/`ub`.
    pub(crate) fn new(inst: &MilpInstance, lb: &[f64], ub: &[f64]) -> Self {
        let m = inst.num_rows();
        let n = inst.num_cols();
        let sense = inst.sense;
        let sign = sense.min_sign();

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (r, row) in inst.rows.iter().enumerate() {
            for &(j, a) in &row.coefs {
                if a != 0.0 {
                    cols[j].push((r, a));
                }
            }
        }

        let mut x = vec![0.0; n + m];
        let mut state = vec![VarState::AtLower; n + m];
        let mut all_lb: Vec<f64> = lb.to_vec();
        let mut all_ub: Vec<f64> = ub.to_vec();
        for j in 0..n {
            if lb[j].is_finite() {
                x[j] = lb[j];
                state[j] = VarState::AtLower;
            } else if ub[j].is_finite() {
                x[j] = ub[j];
                state[j] = VarState::AtUpper;
            } else {
                state[j] = VarState::Free;
            }
        }

        let mut activity = vec![0.0; m];
        for (j, col) in cols.iter().enumerate() {
            if x[j] != 0.0 {
                for &(r, a) in col {
                    activity[r] += a * x[j];
                }
            }
        }

        // Slack bounds encode the relation: a.x + s = b.
        let mut art_rows: Vec<(usize, f64)> = Vec::new();
        for (r, row) in inst.rows.iter().enumerate() {
            let (slb, sub) = match row.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            all_lb.push(slb);
            all_ub.push(sub);
            let v = row.rhs - activity[r];
            let j = n + r;
            if v > sub + PRIMAL_TOL {
                x[j] = sub;
                state[j] = if slb == sub { VarState::AtLower } else { VarState::AtUpper };
                art_rows.push((r, 1.0));
            } else if v < slb - PRIMAL_TOL {
                x[j] = slb;
                state[j] = VarState::AtLower;
                art_rows.push((r, -1.0));
            } else {
                x[j] = v;
                state[j] = VarState::Basic(r);
            }
        }

        let nart = art_rows.len();
        let ncols = n + m + nart;
        let mut t = vec![0.0; m * ncols];
        let mut basis = vec![0; m];
        for (r, row) in inst.rows.iter().enumerate() {
            let base = r * ncols;
            for &(j, a) in &row.coefs {
                t[base + j] += a;
            }
            t[base + n + r] = 1.0;
            basis[r] = n + r;
        }
        let artificial_start = n + m;
        for (k, &(r, sigma)) in art_rows.iter().enumerate() {
            let j = artificial_start + k;
            let base = r * ncols;
            // Row r is scaled by sigma so the artificial has coefficient +1.
            if sigma < 0.0 {
                for v in &mut t[base..base + ncols] {
                    *v = -*v;
                }
            }
            t[base + j] = 1.0;
            let residual = inst.rows[r].rhs - activity[r] - x[n + r];
            x.push(residual * sigma);
            all_lb.push(0.0);
            all_ub.push(f64::INFINITY);
            state.push(VarState::Basic(r));
            basis[r] = j;
        }

        let mut cost = vec![0.0; ncols];
        for (j, c) in inst.columns.iter().enumerate() {
            cost[j] = sign * c.objective;
        }

        let rhs = inst.rows.iter().map(|r| r.rhs).collect();
        let mut tab = Tableau {
            m,
            n,
            ncols,
            t,
            basis,
            state,
            x,
            lb: all_lb,
            ub: all_ub,
            cost,
            d: vec![0.0; ncols],
            rhs,
            cols,
            artificial_start,
            bland: false,
            degenerate: 0,
            iterations: 0,
            sense,
        };
        tab.fix_state_for_bounds();
        tab
    }

    fn fix_state_for_bounds(&mut self) {
        for j in 0..self.ncols {
            if let VarState::AtUpper = self.state[j] {
                if !self.ub[j].is_finite() {
                    self.state[j] = VarState::AtLower;
                }
            }
        }
    }

    #[inline]
    fn at(&self, r: usize, j: usize) -> f64 {
        self.t[r * self.ncols + j]
    }

    fn has_artificials(&self) -> bool {
        self.ncols > self.artificial_start
    }

    /// Full two-phase solve from the starting basis.
    pub(crate) fn solve(&mut self) -> Result<Outcome, SolverError> {
        for j in 0..self.n {
            if self.lb[j] > self.ub[j] + PRIMAL_TOL {
                return Ok(Outcome::Infeasible);
            }
        }
        if self.has_artificials() {
            let mut phase1 = vec![0.0; self.ncols];
            for c in phase1.iter_mut().skip(self.artificial_start) {
                *c = 1.0;
            }
            self.reset_reduced_costs(&phase1);
            match self.primal()? {
                Outcome::Optimal => {}
                // Phase 1 is bounded below by zero.
                other => {
                    return Err(SolverError::NumericBreakdown {
                        iterations: self.iterations,
                        reason: format!("phase 1 ended {other:?}"),
                    })
                }
            }
            let infeasibility: f64 = (self.artificial_start..self.ncols).map(|j| self.x[j]).sum();
            let scale = 1.0 + self.rhs.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
            if infeasibility > PHASE1_TOL * scale {
                return Ok(Outcome::Infeasible);
            }
            for j in self.artificial_start..self.ncols {
                self.ub[j] = 0.0;
                if !matches!(self.state[j], VarState::Basic(_)) {
                    self.state[j] = VarState::AtLower;
                    self.x[j] = 0.0;
                }
            }
        }
        let cost = self.cost.clone();
        self.reset_reduced_costs(&cost);
        self.primal()
    }

    /// Phase-1 row duals, valid right after [`Tableau::solve`] reported
    /// infeasibility: `y` with `y.b > max over the box of y.(A x + s)`.
    pub(crate) fn farkas(&self) -> Vec<f64> {
        // Phase-1 reduced cost of slack r is -y_r.
        (0..self.m).map(|r| -self.d[self.n + r]).collect()
    }

    fn reset_reduced_costs(&mut self, cost: &[f64]) {
        self.d.copy_from_slice(cost);
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * self.ncols..(r + 1) * self.ncols];
                for (dj, &a) in self.d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for r in 0..self.m {
            self.d[self.basis[r]] = 0.0;
        }
    }

    fn iteration_cap(&self) -> usize {
        50 * (self.m + self.ncols) + 10_000
    }

    fn choose_entering(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            let dj = self.d[j];
            let dir = match self.state[j] {
                VarState::Basic(_) => continue,
                _ if self.lb[j] == self.ub[j] => continue,
                VarState::AtLower if dj < -DUAL_TOL => 1.0,
                VarState::AtUpper if dj > DUAL_TOL => -1.0,
                VarState::Free if dj.abs() > DUAL_TOL => -dj.signum(),
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    /// Primal simplex on the active reduced costs from a primal feasible basis.
    fn primal(&mut self) -> Result<Outcome, SolverError> {
        let cap = self.iteration_cap() + self.iterations;
        let bland_after = 10 * (self.m + self.ncols);
        loop {
            if self.iterations > cap {
                return Err(SolverError::NumericBreakdown {
                    iterations: self.iterations,
                    reason: "primal iteration limit reached".into(),
                });
            }
            let Some((q, dir)) = self.choose_entering() else {
                return Ok(Outcome::Optimal);
            };

            // Ratio test.
            let mut theta =
                if self.lb[q].is_finite() && self.ub[q].is_finite() { self.ub[q] - self.lb[q] } else { f64::INFINITY };
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = 0.0;
            for r in 0..self.m {
                let alpha = self.at(r, q);
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[r];
                let rate = -dir * alpha;
                let (limit, to_upper) = if rate < 0.0 {
                    if !self.lb[b].is_finite() {
                        continue;
                    }
                    (((self.x[b] - self.lb[b]) / -rate).max(0.0), false)
                } else {
                    if !self.ub[b].is_finite() {
                        continue;
                    }
                    (((self.ub[b] - self.x[b]) / rate).max(0.0), true)
                };
                let better = match leave {
                    None => limit < theta,
                    Some((lr, _)) => {
                        if limit < theta - DEGENERATE_STEP {
                            true
                        } else if limit <= theta + DEGENERATE_STEP {
                            if self.bland {
                                b < self.basis[lr]
                            } else {
                                alpha.abs() > leave_alpha
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    theta = limit;
                    leave = Some((r, to_upper));
                    leave_alpha = alpha.abs();
                }
            }
            if !theta.is_finite() {
                return Ok(Outcome::Unbounded);
            }

            self.iterations += 1;
            if theta <= DEGENERATE_STEP {
                self.degenerate += 1;
                if self.degenerate > bland_after {
                    self.bland = true;
                }
            }

            let step = dir * theta;
            if step != 0.0 {
                self.x[q] += step;
                for r in 0..self.m {
                    let alpha = self.at(r, q);
                    if alpha != 0.0 {
                        let b = self.basis[r];
                        self.x[b] -= alpha * step;
                    }
                }
            }
            match leave {
                None => {
                    // Bound flip.
                    if dir > 0.0 {
                        self.state[q] = VarState::AtUpper;
                        self.x[q] = self.ub[q];
                    } else {
                        self.state[q] = VarState::AtLower;
                        self.x[q] = self.lb[q];
                    }
                }
                Some((r, to_upper)) => {
                    let b = self.basis[r];
                    self.pivot(r, q);
                    if to_upper {
                        self.state[b] = VarState::AtUpper;
                        self.x[b] = self.ub[b];
                    } else {
                        self.state[b] = VarState::AtLower;
                        self.x[b] = self.lb[b];
                    }
                }
            }
        }
    }

    /// Dual simplex from a dual feasible basis. Returns `Infeasible` when a
    /// violated row has no eligible entering column.
    fn dual(&mut self) -> Result<Outcome, SolverError> {
        let cap = self.iteration_cap() + self.iterations;
        loop {
            if self.iterations > cap {
                return Err(SolverError::NumericBreakdown {
                    iterations: self.iterations,
                    reason: "dual iteration limit reached".into(),
                });
            }
            // Leaving row: largest bound violation.
            let mut leave: Option<(usize, f64, bool)> = None;
            let mut worst = PRIMAL_TOL * 10.0;
            for r in 0..self.m {
                let b = self.basis[r];
                let below = self.lb[b] - self.x[b];
                let above = self.x[b] - self.ub[b];
                if below > worst {
                    worst = below;
                    leave = Some((r, self.lb[b], false));
                } else if above > worst {
                    worst = above;
                    leave = Some((r, self.ub[b], true));
                }
            }
            let Some((r, target, to_upper)) = leave else {
                return Ok(Outcome::Optimal);
            };
            let b = self.basis[r];
            let need_increase = !to_upper;
            // Bound-flipping ratio test: walk the breakpoints in ratio order,
            // flipping boxed columns while the row stays infeasible.
            let mut cands: Vec<(f64, usize, f64)> = Vec::new();
            for j in 0..self.ncols {
                let alpha = self.at(r, j);
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                // x_b changes by -alpha * delta_j.
                let eligible = match self.state[j] {
                    VarState::Basic(_) => false,
                    _ if self.lb[j] == self.ub[j] => false,
                    VarState::AtLower => (alpha < 0.0) == need_increase,
                    VarState::AtUpper => (alpha > 0.0) == need_increase,
                    VarState::Free => true,
                };
                if eligible {
                    cands.push((self.d[j].abs() / alpha.abs(), j, alpha.abs()));
                }
            }
            cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.2.total_cmp(&a.2)).then(a.1.cmp(&b.1)));
            let mut slope = worst;
            let mut enter = None;
            let mut flips = 0;
            for (k, &(_, j, a)) in cands.iter().enumerate() {
                let range = self.ub[j] - self.lb[j];
                if !self.bland && range.is_finite() && slope - a * range > PRIMAL_TOL {
                    slope -= a * range;
                    flips = k + 1;
                    continue;
                }
                enter = Some(j);
                break;
            }
            let Some(q) = enter else {
                return Ok(Outcome::Infeasible);
            };
            for &(_, j, _) in &cands[..flips] {
                let (to, state) = match self.state[j] {
                    VarState::AtLower => (self.ub[j], VarState::AtUpper),
                    _ => (self.lb[j], VarState::AtLower),
                };
                let delta = to - self.x[j];
                self.x[j] = to;
                self.state[j] = state;
                for i in 0..self.m {
                    let a = self.at(i, j);
                    if a != 0.0 {
                        let bi = self.basis[i];
                        self.x[bi] -= a * delta;
                    }
                }
            }
            self.iterations += 1;
            let alpha = self.at(r, q);
            let delta = (self.x[b] - target) / alpha;
            self.x[q] += delta;
            for i in 0..self.m {
                let a = self.at(i, q);
                if a != 0.0 {
                    let bi = self.basis[i];
                    self.x[bi] -= a * delta;
                }
            }
            self.pivot(r, q);
            self.state[b] = if to_upper { VarState::AtUpper } else { VarState::AtLower };
            self.x[b] = target;
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let piv = self.t[r * nc + q];
        let inv = 1.0 / piv;
        let mut nz: Vec<usize> = Vec::new();
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for (j, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < 1e-14 {
                        *v = 0.0;
                    } else {
                        nz.push(j);
                    }
                }
            }
            row[q] = 1.0;
        }
        let (before, rest) = self.t.split_at_mut(r * nc);
        let (pivot_row, after) = rest.split_at_mut(nc);
        for chunk in before.chunks_exact_mut(nc).chain(after.chunks_exact_mut(nc)) {
            let f = chunk[q];
            if f != 0.0 {
                for &j in &nz {
                    chunk[j] -= f * pivot_row[j];
                }
                chunk[q] = 0.0;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for &j in &nz {
                self.d[j] -= f * pivot_row[j];
            }
        }
        self.d[q] = 0.0;
        let old = self.basis[r];
        self.basis[r] = q;
        self.state[q] = VarState::Basic(r);
        if let VarState::Basic(_) = self.state[old] {
            self.state[old] = VarState::AtLower;
        }
    }

    /// Changes a structural column's bounds, keeping nonbasic columns at the
    /// matching bound and updating basic values accordingly.
    pub(crate) fn set_bounds(&mut self, j: usize, lb: f64, ub: f64) {
        self.lb[j] = lb;
        self.ub[j] = ub;
        let target = match self.state[j] {
            VarState::Basic(_) => return,
            VarState::AtLower => lb,
            VarState::AtUpper => ub,
            VarState::Free => 0.0,
        };
        let delta = target - self.x[j];
        if delta != 0.0 {
            self.x[j] = target;
            for r in 0..self.m {
                let a = self.at(r, j);
                if a != 0.0 {
                    let b = self.basis[r];
                    self.x[b] -= a * delta;
                }
            }
        }
    }

    /// Re-optimizes after bound changes made through [`Tableau::set_bounds`].
    pub(crate) fn reoptimize(&mut self) -> Result<Outcome, SolverError> {
        for j in 0..self.n {
            if self.lb[j] > self.ub[j] + PRIMAL_TOL {
                return Ok(Outcome::Infeasible);
            }
        }
        match self.dual()? {
            Outcome::Optimal => {}
            other => return Ok(other),
        }
        self.primal()
    }

    /// Recomputes basic values as `B^-1 (b - N x_N)` from the original data.
    /// The slack columns of the tableau hold `B^-1`.
    pub(crate) fn refresh_values(&mut self) {
        let mut resid = self.rhs.clone();
        for j in 0..self.n {
            if !matches!(self.state[j], VarState::Basic(_)) && self.x[j] != 0.0 {
                for &(r, a) in &self.cols[j] {
                    resid[r] -= a * self.x[j];
                }
            }
        }
        for r in 0..self.m {
            let j = self.n + r;
            if !matches!(self.state[j], VarState::Basic(_)) {
                resid[r] -= self.x[j];
            }
        }
        // Artificial columns are sigma * e_r; nonbasic ones sit at zero.
        let mut xb = vec![0.0; self.m];
        for (i, v) in xb.iter_mut().enumerate() {
            let row = &self.t[i * self.ncols + self.n..i * self.ncols + self.n + self.m];
            *v = row.iter().zip(&resid).map(|(a, b)| a * b).sum();
        }
        for (i, v) in xb.into_iter().enumerate() {
            let b = self.basis[i];
            self.x[b] = v;
        }
    }

    /// Row duals `y = c_B B^-1` in minimization form.
    fn row_duals_min(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.ncols + self.n..i * self.ncols + self.n + self.m];
                for (yr, &a) in y.iter_mut().zip(row) {
                    *yr += cb * a;
                }
            }
        }
        y
    }

    pub(crate) fn structural_values(&self) -> Vec<f64> {
        self.x[..self.n].to_vec()
    }

    pub(crate) fn objective_min(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
    }

    /// Objective in the instance's own sense.
    pub(crate) fn objective(&self) -> f64 {
        self.sense.min_sign() * self.objective_min()
    }

    pub(crate) fn structural_bounds(&self, j: usize) -> (f64, f64) {
        (self.lb[j], self.ub[j])
    }

    /// Duals and reduced costs recomputed from the original data, plus the
    /// dual objective, all reported in the instance's own sense.
    pub(crate) fn dual_solution(&self) -> DualSolution {
        let sign = self.sense.min_sign();
        let y = self.row_duals_min();
        let mut reduced = vec![0.0; self.n];
        for j in 0..self.n {
            let mut dj = self.cost[j];
            for &(r, a) in &self.cols[j] {
                dj -= y[r] * a;
            }
            reduced[j] = if matches!(self.state[j], VarState::Basic(_)) { 0.0 } else { dj };
        }
        // Dual objective: y.b plus the bound terms of nonbasic columns.
        let mut dual_obj: f64 = y.iter().zip(&self.rhs).map(|(a, b)| a * b).sum();
        for j in 0..self.n {
            if !matches!(self.state[j], VarState::Basic(_)) {
                dual_obj += reduced[j] * self.x[j];
            }
        }
        for r in 0..self.m {
            let j = self.n + r;
            if !matches!(self.state[j], VarState::Basic(_)) {
                // Slack reduced cost is 0 - y_r.
                dual_obj += -y[r] * self.x[j];
            }
        }
        DualSolution {
            row_duals: y.iter().map(|v| sign * v).collect(),
            reduced_costs: reduced.iter().map(|v| sign * v).collect(),
            objective: sign * dual_obj,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DualSolution {
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
}
