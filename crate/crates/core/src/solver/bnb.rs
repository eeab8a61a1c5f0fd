//! Best-first branch-and-bound over the simplex relaxation.
//!
//! Nodes carry only their bound changes relative to the root. A node popped
//! from the queue starts from a copy of the solved root tableau; a node
//! reached by plunging starts from its parent's tableau. Either way only the
//! dual simplex is needed to restore feasibility after the bound change.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::simplex::{Outcome, Tableau};
use super::{relative_gap, BranchingRule, MilpResult, SearchOrder, SolveStatus, SolverOptions};
use crate::error::SolverError;
use crate::instance::MilpInstance;

const INTEGRALITY_TOL: f64 = 1e-6;
const FEASIBILITY_TOL: f64 = 1e-6;
const PLUNGE_EVERY: u64 = 8;

/// Snapshot handed to the progress callback after every processed node.
#[derive(Debug, Clone, PartialEq)]
pub struct Progress {
    pub nodes: u64,
    pub open_nodes: usize,
    pub incumbent: Option<f64>,
    /// Best bound in the instance's sense.
    pub best_bound: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
struct Node {
    /// Parent relaxation value, maximization orientation.
    bound: f64,
    changes: Vec<(usize, f64, f64)>,
    key: u64,
    branch: Option<BranchRecord>,
}

#[derive(Debug, Clone, Copy)]
struct BranchRecord {
    column: usize,
    up: bool,
    frac: f64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then_with(|| other.key.cmp(&self.key))
    }
}

struct PseudoCosts {
    down_sum: Vec<f64>,
    down_n: Vec<u32>,
    up_sum: Vec<f64>,
    up_n: Vec<u32>,
}

impl PseudoCosts {
    fn new(n: usize) -> Self {
        Self { down_sum: vec![0.0; n], down_n: vec![0; n], up_sum: vec![0.0; n], up_n: vec![0; n] }
    }

    fn record(&mut self, b: BranchRecord, degradation: f64) {
        let dist = if b.up { 1.0 - b.frac } else { b.frac };
        if dist <= 0.0 {
            return;
        }
        let per_unit = degradation.max(0.0) / dist;
        if b.up {
            self.up_sum[b.column] += per_unit;
            self.up_n[b.column] += 1;
        } else {
            self.down_sum[b.column] += per_unit;
            self.down_n[b.column] += 1;
        }
    }

    fn mean(sum: &[f64], n: &[u32]) -> Option<f64> {
        let (s, c) =
            sum.iter().zip(n).filter(|(_, c)| **c > 0).fold((0.0, 0u32), |(s, c), (v, k)| (s + v / *k as f64, c + 1));
        (c > 0).then(|| s / c as f64)
    }

    /// Product score of the expected down and up degradations. Directions
    /// without history use the mean over columns that have one.
    fn score(&self, j: usize, frac: f64, means: (f64, f64)) -> f64 {
        let down = if self.down_n[j] > 0 { self.down_sum[j] / self.down_n[j] as f64 } else { means.0 };
        let up = if self.up_n[j] > 0 { self.up_sum[j] / self.up_n[j] as f64 } else { means.1 };
        (down * frac).max(1e-6) * (up * (1.0 - frac)).max(1e-6)
    }

    fn means(&self) -> Option<(f64, f64)> {
        let d = Self::mean(&self.down_sum, &self.down_n);
        let u = Self::mean(&self.up_sum, &self.up_n);
        match (d, u) {
            (None, None) => None,
            (d, u) => Some((d.or(u).unwrap_or(1.0), u.or(d).unwrap_or(1.0))),
        }
    }
}

pub fn solve_milp(instance: &MilpInstance, opts: &SolverOptions) -> Result<MilpResult, SolverError> {
    solve_milp_with_progress(instance, opts, &mut |_| {})
}

pub fn solve_milp_with_progress(
    instance: &MilpInstance,
    opts: &SolverOptions,
    progress: &mut dyn FnMut(&Progress),
) -> Result<MilpResult, SolverError> {
    opts.validate()?;
    instance.check()?;
    Search::new(instance, opts, progress).run()
}

struct Search<'a> {
    inst: &'a MilpInstance,
    opts: &'a SolverOptions,
    progress: &'a mut dyn FnMut(&Progress),
    /// +1 for maximization, -1 for minimization: score = sign * objective.
    sign: f64,
    int_cols: Vec<usize>,
    base_lb: Vec<f64>,
    base_ub: Vec<f64>,
    rng: ChaCha8Rng,
    pseudo: PseudoCosts,
    incumbent: Option<(f64, Vec<f64>)>,
    /// Largest bound among nodes discarded within the gap tolerance.
    pruned_bound: f64,
    nodes: u64,
    lp_solves: u64,
    start: Instant,
}

enum Stop {
    Exhausted,
    GapReached,
    TimeLimit,
    NodeLimit,
}

impl<'a> Search<'a> {
    fn new(inst: &'a MilpInstance, opts: &'a SolverOptions, progress: &'a mut dyn FnMut(&Progress)) -> Self {
        Self {
            inst,
            opts,
            progress,
            sign: -inst.sense.min_sign(),
            int_cols: inst.integer_columns().collect(),
            base_lb: inst.columns.iter().map(|c| c.lower).collect(),
            base_ub: inst.columns.iter().map(|c| c.upper).collect(),
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            pseudo: PseudoCosts::new(inst.num_cols()),
            incumbent: None,
            pruned_bound: f64::NEG_INFINITY,
            nodes: 0,
            lp_solves: 0,
            start: Instant::now(),
        }
    }

    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            None => f64::NEG_INFINITY,
            Some((inc, _)) => inc + self.opts.abs_gap.max(self.opts.rel_gap * inc.abs().max(1.0)),
        }
    }

    /// Discards a node whose bound cannot improve the incumbent enough.
    fn prunable(&mut self, bound: f64) -> bool {
        if bound <= self.cutoff() {
            if let Some((inc, _)) = &self.incumbent {
                if bound > *inc {
                    self.pruned_bound = self.pruned_bound.max(bound);
                }
            }
            true
        } else {
            false
        }
    }

    fn run(mut self) -> Result<MilpResult, SolverError> {
        let mut root = Tableau::new(self.inst, &self.base_lb, &self.base_ub);
        self.lp_solves += 1;
        let outcome = root.solve()?;
        match outcome {
            Outcome::Infeasible => return Ok(self.finish_without(SolveStatus::Infeasible)),
            Outcome::Unbounded => return Ok(self.finish_without(SolveStatus::Unbounded)),
            Outcome::Optimal => {}
        }
        root.refresh_values();
        let root_score = self.sign * root.objective();

        if self.int_cols.is_empty() {
            self.nodes = 1;
            let values = root.structural_values();
            self.incumbent = Some((root_score, values));
            return Ok(self.finish(Stop::Exhausted, root_score));
        }

        let mut heap: BinaryHeap<Node> = BinaryHeap::new();
        let root_node = Node { bound: root_score, changes: Vec::new(), key: self.rng.gen(), branch: None };
        let mut next: Option<(Node, Tableau)> = None;
        let mut diving = false;
        let mut first = Some(root_node);

        let stop = loop {
            if self.start.elapsed().as_secs_f64() > self.opts.time_limit_secs {
                break Stop::TimeLimit;
            }
            if self.nodes >= self.opts.node_limit {
                break Stop::NodeLimit;
            }
            let (node, parent_tab) = if let Some(n) = first.take() {
                (n, Some(root.clone()))
            } else if let Some((n, t)) = next.take() {
                (n, Some(t))
            } else if let Some(n) = heap.pop() {
                diving = false;
                (n, None)
            } else {
                break Stop::Exhausted;
            };

            if self.prunable(node.bound) {
                continue;
            }
            self.nodes += 1;

            let is_root = node.changes.is_empty();
            let (outcome, mut tab) = match parent_tab {
                Some(t) if is_root => (Outcome::Optimal, t),
                Some(mut t) => {
                    let &(j, lb, ub) = node.changes.last().expect("child has a change");
                    t.set_bounds(j, lb, ub);
                    self.reoptimize(t, &node)?
                }
                None => {
                    let mut t = root.clone();
                    let (lb, ub) = self.node_bounds(&node.changes);
                    for &j in &self.int_cols {
                        if t.structural_bounds(j) != (lb[j], ub[j]) {
                            t.set_bounds(j, lb[j], ub[j]);
                        }
                    }
                    self.reoptimize(t, &node)?
                }
            };

            if outcome == Outcome::Infeasible {
                self.report(&heap, next.as_ref());
                continue;
            }
            if outcome == Outcome::Unbounded {
                return Ok(self.finish_without(SolveStatus::Unbounded));
            }
            let score = (self.sign * tab.objective()).min(node.bound);
            if let Some(b) = node.branch {
                self.pseudo.record(b, node.bound - score);
            }
            if self.prunable(score) {
                self.report(&heap, next.as_ref());
                continue;
            }

            let values = tab.structural_values();
            match self.select_branch(&values) {
                None => {
                    self.try_incumbent(&mut tab, &node)?;
                }
                Some((col, value)) => {
                    let frac = value - value.floor();
                    let (lb, ub) = tab.structural_bounds(col);
                    let mut down = node.changes.clone();
                    down.push((col, lb, value.floor()));
                    let mut up = node.changes.clone();
                    up.push((col, value.ceil(), ub));
                    let down = Node {
                        bound: score,
                        changes: down,
                        key: self.rng.gen(),
                        branch: Some(BranchRecord { column: col, up: false, frac }),
                    };
                    let up = Node {
                        bound: score,
                        changes: up,
                        key: self.rng.gen(),
                        branch: Some(BranchRecord { column: col, up: true, frac }),
                    };
                    let plunge = self.opts.search == SearchOrder::Hybrid && (diving || self.nodes % PLUNGE_EVERY == 1);
                    if plunge {
                        let prefer_up = if (frac - 0.5).abs() < 1e-12 { self.rng.gen::<bool>() } else { frac > 0.5 };
                        let (keep, other) = if prefer_up { (up, down) } else { (down, up) };
                        heap.push(other);
                        next = Some((keep, tab));
                        diving = true;
                    } else {
                        heap.push(down);
                        heap.push(up);
                    }
                }
            }

            let bound = self.report(&heap, next.as_ref());
            if let Some((inc, _)) = &self.incumbent {
                let inc = *inc;
                if relative_gap(bound, inc) <= self.opts.rel_gap || bound - inc <= self.opts.abs_gap {
                    break Stop::GapReached;
                }
            }
        };

        let open_bound = heap
            .peek()
            .map(|n| n.bound)
            .into_iter()
            .chain(next.as_ref().map(|(n, _)| n.bound))
            .fold(f64::NEG_INFINITY, f64::max);
        let bound = match stop {
            Stop::Exhausted => f64::NEG_INFINITY,
            _ => open_bound,
        };
        Ok(self.finish(stop, bound))
    }

    fn reoptimize(&mut self, mut tab: Tableau, node: &Node) -> Result<(Outcome, Tableau), SolverError> {
        self.lp_solves += 1;
        let r = tab.reoptimize();
        match r {
            Ok(Outcome::Optimal) => {
                tab.refresh_values();
                Ok((Outcome::Optimal, tab))
            }
            Ok(other) => Ok((other, tab)),
            Err(SolverError::NumericBreakdown { .. }) => {
                // Cold start on the node's bounds.
                let (lb, ub) = self.node_bounds(&node.changes);
                let mut fresh = Tableau::new(self.inst, &lb, &ub);
                let outcome = fresh.solve()?;
                if outcome == Outcome::Optimal {
                    fresh.refresh_values();
                }
                Ok((outcome, fresh))
            }
            Err(e) => Err(e),
        }
    }

    fn node_bounds(&self, changes: &[(usize, f64, f64)]) -> (Vec<f64>, Vec<f64>) {
        let mut lb = self.base_lb.clone();
        let mut ub = self.base_ub.clone();
        for &(j, l, u) in changes {
            lb[j] = l;
            ub[j] = u;
        }
        (lb, ub)
    }

    fn select_branch(&self, values: &[f64]) -> Option<(usize, f64)> {
        let means = match self.opts.branching {
            BranchingRule::MostFractional => None,
            BranchingRule::PseudoCost => self.pseudo.means(),
        };
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for &j in &self.int_cols {
            let v = values[j];
            let frac = v - v.floor();
            let dist = frac.min(1.0 - frac);
            if dist <= INTEGRALITY_TOL {
                continue;
            }
            // Without any history pseudo-cost falls back to fractionality.
            let score = match means {
                None => dist,
                Some(m) => self.pseudo.score(j, frac, m),
            };
            if best.is_none() || score > best_score {
                best = Some((j, v));
                best_score = score;
            }
        }
        best
    }

    /// Fixes integer columns at their rounded values, re-solves, verifies
    /// feasibility against the original rows and records an improvement.
    fn try_incumbent(&mut self, tab: &mut Tableau, node: &Node) -> Result<(), SolverError> {
        let values = tab.structural_values();
        let mut fixed = tab.clone();
        for &j in &self.int_cols {
            let r = values[j].round();
            fixed.set_bounds(j, r, r);
        }
        self.lp_solves += 1;
        let mut polished = match fixed.reoptimize() {
            Ok(Outcome::Optimal) => {
                fixed.refresh_values();
                Some(fixed.structural_values())
            }
            _ => None,
        };
        if polished.is_none() {
            let (mut lb, mut ub) = self.node_bounds(&node.changes);
            for &j in &self.int_cols {
                lb[j] = values[j].round();
                ub[j] = lb[j];
            }
            let mut fresh = Tableau::new(self.inst, &lb, &ub);
            self.lp_solves += 1;
            if fresh.solve()? == Outcome::Optimal {
                fresh.refresh_values();
                polished = Some(fresh.structural_values());
            }
        }
        let Some(mut x) = polished else {
            return Ok(());
        };
        for &j in &self.int_cols {
            x[j] = x[j].round();
        }
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.base_lb[j], self.base_ub[j]);
        }
        let (row_viol, _) = self.inst.max_row_violation(&x);
        if row_viol > FEASIBILITY_TOL || self.inst.max_column_violation(&x) > INTEGRALITY_TOL {
            return Ok(());
        }
        let score = self.sign * self.inst.objective_value(&x);
        if self.incumbent.as_ref().is_none_or(|(inc, _)| score > *inc + 1e-12) {
            self.incumbent = Some((score, x));
        }
        Ok(())
    }

    fn best_bound(&self, heap: &BinaryHeap<Node>, next: Option<&(Node, Tableau)>) -> f64 {
        let mut b = self.pruned_bound;
        if let Some(n) = heap.peek() {
            b = b.max(n.bound);
        }
        if let Some((n, _)) = next {
            b = b.max(n.bound);
        }
        if let Some((inc, _)) = &self.incumbent {
            b = b.max(*inc);
        }
        b
    }

    fn report(&mut self, heap: &BinaryHeap<Node>, next: Option<&(Node, Tableau)>) -> f64 {
        let bound = self.best_bound(heap, next);
        let inc = self.incumbent.as_ref().map(|(s, _)| *s);
        let p = Progress {
            nodes: self.nodes,
            open_nodes: heap.len() + usize::from(next.is_some()),
            incumbent: inc.map(|s| self.sign * s),
            best_bound: self.sign * bound,
            gap: inc.map_or(f64::INFINITY, |s| relative_gap(bound, s)),
        };
        (self.progress)(&p);
        bound
    }

    fn finish_without(&self, status: SolveStatus) -> MilpResult {
        MilpResult {
            status,
            values: Vec::new(),
            objective: f64::NAN,
            best_bound: f64::NAN,
            gap: f64::INFINITY,
            nodes: self.nodes,
            lp_solves: self.lp_solves,
            wall_time_secs: self.start.elapsed().as_secs_f64(),
        }
    }

    fn finish(self, stop: Stop, open_bound: f64) -> MilpResult {
        let wall = self.start.elapsed().as_secs_f64();
        let Some((inc, values)) = self.incumbent else {
            let status = match stop {
                Stop::Exhausted | Stop::GapReached => SolveStatus::Infeasible,
                Stop::TimeLimit | Stop::NodeLimit => SolveStatus::TimeLimit,
            };
            let bound = if open_bound.is_finite() { self.sign * open_bound } else { f64::NAN };
            return MilpResult {
                status,
                values: Vec::new(),
                objective: f64::NAN,
                best_bound: bound,
                gap: f64::INFINITY,
                nodes: self.nodes,
                lp_solves: self.lp_solves,
                wall_time_secs: wall,
            };
        };
        let bound = inc.max(open_bound).max(self.pruned_bound);
        let gap = relative_gap(bound, inc);
        let status = match stop {
            Stop::Exhausted | Stop::GapReached => SolveStatus::Optimal,
            Stop::TimeLimit => SolveStatus::TimeLimit,
            Stop::NodeLimit => {
                if gap <= self.opts.rel_gap {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::FeasibleWithGap
                }
            }
        };
        MilpResult {
            status,
            objective: self.sign * inc,
            best_bound: self.sign * bound,
            gap,
            values,
            nodes: self.nodes,
            lp_solves: self.lp_solves,
            wall_time_secs: wall,
        }
    }
}
