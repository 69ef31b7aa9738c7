use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::simplex::solve_with_bounds;
use super::{bounds_of, SolverOptions};
use crate::milp::{MilpProblem, Sense, Solution, SolveStatus, VarKind};

const ABS_GAP: f64 = 1e-9;

struct Node {
    bound: f64,
    id: usize,
    fixes: Vec<(usize, f64)>,
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
    // BinaryHeap is a max-heap: the lowest bound, then the oldest node, wins.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.id.cmp(&self.id))
    }
}

/// Partner of each binary in an `x + y = 1` row, if any.
fn mode_pairs(p: &MilpProblem) -> Vec<Option<usize>> {
    let mut partner = vec![None; p.num_vars()];
    let is_bin = |j: usize| p.variables[j].kind == VarKind::Binary;
    for c in &p.constraints {
        if let [(a, ca), (b, cb)] = c.coeffs[..] {
            if c.sense == Sense::Eq && c.rhs == 1.0 && ca == 1.0 && cb == 1.0 && is_bin(a) && is_bin(b) {
                partner[a] = Some(b);
                partner[b] = Some(a);
            }
        }
    }
    partner
}

struct Search<'a> {
    p: &'a MilpProblem,
    opts: &'a SolverOptions,
    binaries: Vec<usize>,
    partner: Vec<Option<usize>>,
    col_rows: Vec<Vec<usize>>,
    lo0: Vec<f64>,
    hi0: Vec<f64>,
}

impl Search<'_> {
    fn fractional(&self, x: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &j in &self.binaries {
            let f = x[j] - libm::floor(x[j]);
            let dist = f.min(1.0 - f);
            if dist > self.opts.integrality_tol && best.is_none_or(|(_, d)| dist > d) {
                best = Some((j, dist));
            }
        }
        best.map(|(j, _)| j)
    }

    fn rows_ok(&self, rows: &[usize], y: &[f64]) -> bool {
        rows.iter().all(|&i| self.p.constraints[i].violation(y) <= self.opts.feasibility_tol)
    }

    /// Rounds fractional binaries one at a time (with their partners),
    /// keeping each touched row satisfied.
    fn round(&self, x: &[f64], lo: &[f64], hi: &[f64]) -> Option<Vec<f64>> {
        let mut y = x.to_vec();
        for &j in &self.binaries {
            let r = libm::round(y[j]);
            if (y[j] - r).abs() <= self.opts.integrality_tol {
                y[j] = r;
            }
        }
        for &j in &self.binaries {
            if y[j] == 0.0 || y[j] == 1.0 {
                continue;
            }
            let first = if x[j] >= 0.5 { 1.0 } else { 0.0 };
            let mut placed = false;
            for v in [first, 1.0 - first] {
                if v < lo[j] || v > hi[j] {
                    continue;
                }
                let k = self.partner[j];
                if let Some(k) = k {
                    if 1.0 - v < lo[k] || 1.0 - v > hi[k] {
                        continue;
                    }
                }
                let (old_j, old_k) = (y[j], k.map(|k| y[k]));
                y[j] = v;
                if let Some(k) = k {
                    y[k] = 1.0 - v;
                }
                let ok = self.rows_ok(&self.col_rows[j], &y) && k.is_none_or(|k| self.rows_ok(&self.col_rows[k], &y));
                if ok {
                    placed = true;
                    break;
                }
                y[j] = old_j;
                if let (Some(k), Some(o)) = (k, old_k) {
                    y[k] = o;
                }
            }
            if !placed {
                return None;
            }
        }
        let all: Vec<usize> = (0..self.p.num_constraints()).collect();
        self.rows_ok(&all, &y).then_some(y)
    }

    /// Fixes every binary at its rounded value and re-solves the LP.
    fn fix_and_resolve(&self, x: &[f64], lo: &[f64], hi: &[f64]) -> Option<(f64, Vec<f64>)> {
        let mut lo = lo.to_vec();
        let mut hi = hi.to_vec();
        for &j in &self.binaries {
            let v = if lo[j] == hi[j] { lo[j] } else if x[j] >= 0.5 { 1.0 } else { 0.0 };
            lo[j] = v;
            hi[j] = v;
            if let Some(k) = self.partner[j] {
                if lo[k] != hi[k] && k > j {
                    lo[k] = 1.0 - v;
                    hi[k] = 1.0 - v;
                }
            }
        }
        let lp = solve_with_bounds(self.p, &lo, &hi, self.opts);
        (lp.status == SolveStatus::Optimal).then_some((lp.objective, lp.primal))
    }

    fn pruned(&self, bound: f64, incumbent: Option<f64>) -> bool {
        incumbent.is_some_and(|inc| bound >= inc - (self.opts.relative_gap * inc.abs()).max(ABS_GAP))
    }
}

fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    ((incumbent - bound) / incumbent.abs().max(1.0)).max(0.0)
}

/// Best-first branch and bound over the binaries, branching on the most
/// fractional one (lowest index on ties). Fixing a binary that sits in an
/// `x + y = 1` row fixes its partner too.
pub fn solve_milp(p: &MilpProblem, opts: &SolverOptions) -> Solution {
    let (lo0, hi0) = bounds_of(p);
    let mut col_rows = vec![Vec::new(); p.num_vars()];
    for (i, c) in p.constraints.iter().enumerate() {
        for &(j, _) in &c.coeffs {
            col_rows[j].push(i);
        }
    }
    let search = Search {
        p,
        opts,
        binaries: p.binaries().collect(),
        partner: mode_pairs(p),
        col_rows,
        lo0,
        hi0,
    };

    let mut heap = BinaryHeap::new();
    heap.push(Node { bound: f64::NEG_INFINITY, id: 0, fixes: Vec::new() });
    let mut next_id = 1;
    let mut nodes = 0;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut stopped: Option<f64> = None;
    let mut lo = search.lo0.clone();
    let mut hi = search.hi0.clone();

    while let Some(node) = heap.pop() {
        let inc = incumbent.as_ref().map(|(v, _)| *v);
        if search.pruned(node.bound, inc) {
            continue;
        }
        if nodes >= opts.max_bb_nodes {
            stopped = Some(node.bound);
            break;
        }
        nodes += 1;
        lo.copy_from_slice(&search.lo0);
        hi.copy_from_slice(&search.hi0);
        for &(j, v) in &node.fixes {
            lo[j] = v;
            hi[j] = v;
        }
        let lp = solve_with_bounds(p, &lo, &hi, opts);
        match lp.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded if nodes == 1 => return Solution::without_values(SolveStatus::Unbounded, nodes),
            SolveStatus::Unbounded => continue,
            SolveStatus::IterationLimit => {
                stopped = Some(node.bound);
                break;
            }
        }
        if search.pruned(lp.objective, inc) {
            continue;
        }
        let Some(j) = search.fractional(&lp.primal) else {
            let mut x = lp.primal;
            for &b in &search.binaries {
                x[b] = libm::round(x[b]);
            }
            incumbent = Some((lp.objective, x));
            continue;
        };

        let candidate = search
            .round(&lp.primal, &lo, &hi)
            .map(|y| (p.objective.value(&y), y))
            .or_else(|| if inc.is_none() { search.fix_and_resolve(&lp.primal, &lo, &hi) } else { None });
        if let Some((v, y)) = candidate {
            if inc.is_none_or(|i| v < i) {
                incumbent = Some((v, y));
            }
        }
        if search.pruned(lp.objective, incumbent.as_ref().map(|(v, _)| *v)) {
            continue;
        }

        let near = if lp.primal[j] >= 0.5 { 1.0 } else { 0.0 };
        for v in [near, 1.0 - near] {
            let mut fixes = node.fixes.clone();
            fixes.push((j, v));
            if let Some(k) = search.partner[j] {
                fixes.push((k, 1.0 - v));
            }
            heap.push(Node { bound: lp.objective, id: next_id, fixes });
            next_id += 1;
        }
    }

    let Some((value, x)) = incumbent else {
        let status = if stopped.is_some() { SolveStatus::IterationLimit } else { SolveStatus::Infeasible };
        return Solution::without_values(status, nodes);
    };
    let (value, x) = polish(&search, value, x);
    match stopped {
        None => Solution { status: SolveStatus::Optimal, values: x, objective_value: value, nodes, gap: 0.0 },
        Some(open) => {
            let best_open = heap.iter().map(|n| n.bound).fold(open, f64::min);
            Solution {
                status: SolveStatus::IterationLimit,
                values: x,
                objective_value: value,
                nodes,
                gap: relative_gap(value, best_open.min(value)),
            }
        }
    }
}

/// Re-solves with the binaries pinned so the continuous part is an exact
/// vertex for that assignment.
fn polish(search: &Search<'_>, value: f64, x: Vec<f64>) -> (f64, Vec<f64>) {
    let mut lo = search.lo0.clone();
    let mut hi = search.hi0.clone();
    for &j in &search.binaries {
        let v = libm::round(x[j]);
        lo[j] = v;
        hi[j] = v;
    }
    let lp = solve_with_bounds(search.p, &lo, &hi, search.opts);
    if lp.status == SolveStatus::Optimal && lp.objective <= value + (search.opts.relative_gap * value.abs()).max(ABS_GAP) {
        (lp.objective, lp.primal)
    } else {
        (value, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::VarKind;

    #[test]
    fn integral_relaxation_needs_no_branching() {
        let mut p = MilpProblem::new();
        let b = p.add_var("b", 0.0, 1.0, VarKind::Binary);
        let x = p.add_var("x", 0.0, 5.0, VarKind::Continuous);
        p.add_constraint("cap", vec![(x, 1.0), (b, -5.0)], Sense::Le, 0.0);
        p.add_constraint("need", vec![(x, 1.0)], Sense::Ge, 5.0);
        p.set_objective(vec![(x, 1.0), (b, 1.0)], 0.0);
        let s = solve_milp(&p, &SolverOptions::default());
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.nodes, 1);
        assert_eq!(s.values, vec![1.0, 5.0]);
    }

    #[test]
    fn knapsack_needs_branching() {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let mut p = MilpProblem::new();
        let v: Vec<usize> = (0..3).map(|k| p.add_var(alloc::format!("x{k}"), 0.0, 1.0, VarKind::Binary)).collect();
        p.add_constraint("w", vec![(v[0], 2.0), (v[1], 3.0), (v[2], 1.0)], Sense::Le, 5.0);
        p.add_constraint("u", vec![(v[0], 4.0), (v[1], 1.0), (v[2], 2.0)], Sense::Le, 11.0);
        p.add_constraint("z", vec![(v[0], 3.0), (v[1], 4.0), (v[2], 2.0)], Sense::Le, 8.0);
        p.set_objective(vec![(v[0], -5.0), (v[1], -4.0), (v[2], -3.0)], 0.0);
        let s = solve_milp(&p, &SolverOptions::default());
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective_value + 9.0).abs() < 1e-9, "{}", s.objective_value);
    }

    #[test]
    fn pair_fixing_and_infeasibility() {
        let mut p = MilpProblem::new();
        let a = p.add_var("a", 0.0, 1.0, VarKind::Binary);
        let b = p.add_var("b", 0.0, 1.0, VarKind::Binary);
        p.add_constraint("pair", vec![(a, 1.0), (b, 1.0)], Sense::Eq, 1.0);
        assert_eq!(mode_pairs(&p), vec![Some(b), Some(a)]);
        p.add_constraint("half", vec![(a, 2.0)], Sense::Eq, 1.0);
        let s = solve_milp(&p, &SolverOptions::default());
        assert_eq!(s.status, SolveStatus::Infeasible);
        assert!(s.values.is_empty());
    }

    #[test]
    fn node_limit_keeps_incumbent() {
        let mut p = MilpProblem::new();
        let v: Vec<usize> = (0..6).map(|k| p.add_var(alloc::format!("x{k}"), 0.0, 1.0, VarKind::Binary)).collect();
        let w = [3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        p.add_constraint("cap", v.iter().zip(w).map(|(&j, c)| (j, c)).collect(), Sense::Le, 13.5);
        p.set_objective(v.iter().zip(w).map(|(&j, c)| (j, -c - 0.3)).collect(), 0.0);
        let full = solve_milp(&p, &SolverOptions::default());
        assert_eq!(full.status, SolveStatus::Optimal);
        let cut = solve_milp(&p, &SolverOptions { max_bb_nodes: 1, ..Default::default() });
        assert_eq!(cut.status, SolveStatus::IterationLimit);
        assert_eq!(cut.nodes, 1);
        if !cut.values.is_empty() {
            assert!(cut.objective_value >= full.objective_value - 1e-9);
            assert!(cut.gap >= 0.0);
        }
    }
}
