//! Bounded-variable primal simplex on a dense tableau.
//!
//! Every row `i` gets a logical column `r_i = a_i x` whose bounds encode the
//! row sense, so the constraint system becomes `A x - r = 0`. Rows whose
//! logical starts outside its bounds get an artificial column, removed by a
//! phase-one pass that minimises the artificial sum. Pivots skip zeros in
//! the pivot row and column, which keeps the time-coupled microgrid
//! tableaus cheap.

use alloc::vec;
use alloc::vec::Vec;

use super::SolverOptions;
use crate::milp::{MilpProblem, Sense, SolveStatus};

const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-13;
const DEGENERATE_STEP: f64 = 1e-12;
/// Consecutive degenerate pivots before switching to Bland's rule.
const BLAND_AFTER: usize = 30;

/// Outcome of an LP solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: SolveStatus,
    /// Structural variable values (empty unless optimal).
    pub primal: Vec<f64>,
    /// One multiplier per constraint row.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    fn failed(status: SolveStatus, iterations: usize) -> Self {
        LpSolution { status, primal: Vec::new(), duals: Vec::new(), objective: f64::NAN, iterations }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column held at zero.
    Free,
}

enum Phase {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Tableau {
    m: usize,
    cols: usize,
    t: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    cost: Vec<f64>,
    d: Vec<f64>,
    tie_key: Vec<u64>,
    row_nz: Vec<usize>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.cols + j]
    }

    fn reset_reduced_costs(&mut self) {
        self.d.clone_from(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.cols..(i + 1) * self.cols];
                for (dj, &tij) in self.d.iter_mut().zip(row) {
                    if tij != 0.0 {
                        *dj -= cb * tij;
                    }
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    /// Recomputes basic values from the nonbasic ones.
    fn refresh_basics(&mut self) {
        for i in 0..self.m {
            let row = &self.t[i * self.cols..(i + 1) * self.cols];
            let mut v = 0.0;
            for (j, &tij) in row.iter().enumerate() {
                if tij != 0.0 && self.state[j] != State::Basic {
                    v -= tij * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    fn choose_entering(&self, bland: bool, tol: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.cols {
            let dj = self.d[j];
            let dir = match self.state[j] {
                State::Basic => continue,
                State::AtLower if dj < -tol && self.upper[j] > self.lower[j] => 1.0,
                State::AtUpper if dj > tol && self.upper[j] > self.lower[j] => -1.0,
                State::Free if dj.abs() > tol => -dj.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            let score = dj.abs();
            let better = match best {
                None => true,
                Some((b, _, s)) => score > s || (score == s && self.tie_key[j] < self.tie_key[b]),
            };
            if better {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let piv = self.t[r * cols + q];
        self.row_nz.clear();
        {
            let row = &mut self.t[r * cols..(r + 1) * cols];
            for (j, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v /= piv;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    } else {
                        self.row_nz.push(j);
                    }
                }
            }
            row[q] = 1.0;
        }
        let (before, rest) = self.t.split_at_mut(r * cols);
        let (pivot_row, after) = rest.split_at_mut(cols);
        let nz = &self.row_nz;
        let eliminate = |row: &mut [f64]| {
            let f = row[q];
            if f != 0.0 {
                for &j in nz {
                    let v = row[j] - f * pivot_row[j];
                    row[j] = if v.abs() < DROP_TOL { 0.0 } else { v };
                }
                row[q] = 0.0;
            }
        };
        before.chunks_exact_mut(cols).for_each(eliminate);
        after.chunks_exact_mut(cols).for_each(eliminate);
        let f = self.d[q];
        if f != 0.0 {
            for &j in nz {
                self.d[j] -= f * pivot_row[j];
            }
            self.d[q] = 0.0;
        }
        self.basis[r] = q;
    }

    fn run(&mut self, opts: &SolverOptions, iterations: &mut usize) -> Phase {
        let tol = opts.feasibility_tol;
        let opt_tol = opts.optimality_tol;
        let mut degenerate_run = 0usize;
        loop {
            if *iterations >= opts.max_simplex_iters {
                return Phase::IterationLimit;
            }
            let bland = degenerate_run >= BLAND_AFTER;
            let Some((q, dir)) = self.choose_entering(bland, opt_tol) else {
                return Phase::Optimal;
            };
            *iterations += 1;

            // Harris ratio test: bound the step with tolerance-relaxed
            // bounds, then take the largest pivot among rows under it.
            let mut relaxed_max = f64::INFINITY;
            for i in 0..self.m {
                let a = self.at(i, q);
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let delta = -a * dir;
                let lim = if delta < 0.0 {
                    (self.x[b] - self.lower[b] + tol) / -delta
                } else {
                    (self.upper[b] - self.x[b] + tol) / delta
                };
                if lim < relaxed_max {
                    relaxed_max = lim;
                }
            }
            let flip = self.upper[q] - self.lower[q];
            if relaxed_max.is_infinite() && flip.is_infinite() {
                return Phase::Unbounded;
            }
            if flip <= relaxed_max {
                self.x[q] += dir * flip;
                for i in 0..self.m {
                    let a = self.at(i, q);
                    if a != 0.0 {
                        let b = self.basis[i];
                        self.x[b] -= a * dir * flip;
                    }
                }
                self.state[q] = if dir > 0.0 { State::AtUpper } else { State::AtLower };
                degenerate_run = 0;
                continue;
            }

            let mut leave: Option<(usize, f64, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, q);
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let delta = -a * dir;
                let ratio = if delta < 0.0 {
                    (self.x[b] - self.lower[b]) / -delta
                } else {
                    (self.upper[b] - self.x[b]) / delta
                };
                if ratio > relaxed_max {
                    continue;
                }
                let ratio = ratio.max(0.0);
                let take = match leave {
                    None => true,
                    Some((r, best_ratio, best_a)) => {
                        if bland {
                            ratio < best_ratio - DEGENERATE_STEP
                                || (ratio <= best_ratio + DEGENERATE_STEP && b < self.basis[r])
                        } else {
                            a.abs() > best_a
                        }
                    }
                };
                if take {
                    leave = Some((i, ratio, a.abs()));
                }
            }
            let (r, step, _) = leave.expect("finite relaxed step implies a blocking row");

            self.x[q] += dir * step;
            for i in 0..self.m {
                let a = self.at(i, q);
                if a != 0.0 {
                    let b = self.basis[i];
                    self.x[b] -= a * dir * step;
                }
            }
            let out = self.basis[r];
            let falling = -self.at(r, q) * dir < 0.0;
            if falling {
                self.x[out] = self.lower[out];
                self.state[out] = State::AtLower;
            } else {
                self.x[out] = self.upper[out];
                self.state[out] = State::AtUpper;
            }
            self.state[q] = State::Basic;
            self.pivot(r, q);
            degenerate_run = if step < DEGENERATE_STEP { degenerate_run + 1 } else { 0 };
        }
    }
}

fn row_bounds(sense: Sense, rhs: f64) -> (f64, f64) {
    match sense {
        Sense::Le => (f64::NEG_INFINITY, rhs),
        Sense::Ge => (rhs, f64::INFINITY),
        Sense::Eq => (rhs, rhs),
    }
}

/// Solves the continuous relaxation of `p` with the given column bounds
/// (integrality is ignored).
pub(crate) fn solve_with_bounds(p: &MilpProblem, lower: &[f64], upper: &[f64], opts: &SolverOptions) -> LpSolution {
    let n = p.num_vars();
    let m = p.num_constraints();
    let tol = opts.feasibility_tol;
    if lower.iter().zip(upper).any(|(l, u)| l > &(u + tol)) {
        return LpSolution::failed(SolveStatus::Infeasible, 0);
    }

    // Nonbasic starting point for structural columns.
    let mut x0 = vec![0.0; n];
    let mut st0 = vec![State::Free; n];
    for j in 0..n {
        if lower[j].is_finite() {
            x0[j] = lower[j];
            st0[j] = State::AtLower;
        } else if upper[j].is_finite() {
            x0[j] = upper[j];
            st0[j] = State::AtUpper;
        }
    }

    let mut needs_art = Vec::new();
    let mut logical_start = Vec::with_capacity(m);
    for (i, c) in p.constraints.iter().enumerate() {
        let act = c.activity(&x0);
        let (lo, hi) = row_bounds(c.sense, c.rhs);
        if act < lo - tol || act > hi + tol {
            let target = if act < lo { lo } else { hi };
            needs_art.push((i, target, act));
        }
        logical_start.push(act);
    }

    let n_art = needs_art.len();
    let cols = n + m + n_art;
    let mut tab = Tableau {
        m,
        cols,
        t: vec![0.0; m * cols],
        lower: Vec::with_capacity(cols),
        upper: Vec::with_capacity(cols),
        x: Vec::with_capacity(cols),
        state: Vec::with_capacity(cols),
        basis: vec![0; m],
        cost: vec![0.0; cols],
        d: vec![0.0; cols],
        tie_key: (0..cols as u64)
            .map(|j| if opts.deterministic_seed == 0 { j } else { splitmix(j ^ opts.deterministic_seed) })
            .collect(),
        row_nz: Vec::with_capacity(cols),
    };
    tab.lower.extend_from_slice(lower);
    tab.upper.extend_from_slice(upper);
    tab.x.extend_from_slice(&x0);
    tab.state.extend_from_slice(&st0);
    for c in &p.constraints {
        let (lo, hi) = row_bounds(c.sense, c.rhs);
        tab.lower.push(lo);
        tab.upper.push(hi);
    }
    tab.x.extend_from_slice(&logical_start);
    tab.state.extend(core::iter::repeat_n(State::Basic, m));
    tab.lower.extend(core::iter::repeat_n(0.0, n_art));
    tab.upper.extend(core::iter::repeat_n(f64::INFINITY, n_art));
    tab.state.extend(core::iter::repeat_n(State::Basic, n_art));
    tab.x.extend(core::iter::repeat_n(0.0, n_art));

    let mut art_of_row = vec![usize::MAX; m];
    for (k, &(i, target, act)) in needs_art.iter().enumerate() {
        art_of_row[i] = k;
        let col = n + m + k;
        tab.x[n + i] = target;
        tab.state[n + i] = if target == tab.lower[n + i] { State::AtLower } else { State::AtUpper };
        tab.x[col] = (target - act).abs();
        tab.cost[col] = 1.0;
    }
    for (i, c) in p.constraints.iter().enumerate() {
        let row = &mut tab.t[i * cols..(i + 1) * cols];
        if art_of_row[i] == usize::MAX {
            // r_i - a_i x = 0 with r_i basic
            for &(j, a) in &c.coeffs {
                row[j] -= a;
            }
            row[n + i] = 1.0;
            tab.basis[i] = n + i;
        } else {
            // (a_i x - r_i) / sigma + art = 0 with art basic
            let k = art_of_row[i];
            let (_, target, act) = needs_art[k];
            let sigma = if target > act { 1.0 } else { -1.0 };
            for &(j, a) in &c.coeffs {
                row[j] += a / sigma;
            }
            row[n + i] = -1.0 / sigma;
            row[n + m + k] = 1.0;
            tab.basis[i] = n + m + k;
        }
    }

    let mut iterations = 0;
    if n_art > 0 {
        tab.reset_reduced_costs();
        match tab.run(opts, &mut iterations) {
            Phase::IterationLimit => return LpSolution::failed(SolveStatus::IterationLimit, iterations),
            Phase::Unbounded => unreachable!("phase one objective is bounded below"),
            Phase::Optimal => {}
        }
        tab.refresh_basics();
        let infeas: f64 = (n + m..cols).map(|j| tab.x[j].max(0.0)).sum();
        if infeas > tol * (1.0 + n_art as f64).min(100.0) {
            return LpSolution::failed(SolveStatus::Infeasible, iterations);
        }
        for j in n + m..cols {
            tab.upper[j] = 0.0;
            tab.cost[j] = 0.0;
            if tab.state[j] != State::Basic {
                tab.x[j] = 0.0;
                tab.state[j] = State::AtLower;
            }
        }
    }

    for &(j, c) in &p.objective.coeffs {
        tab.cost[j] += c;
    }
    tab.reset_reduced_costs();
    match tab.run(opts, &mut iterations) {
        Phase::IterationLimit => return LpSolution::failed(SolveStatus::IterationLimit, iterations),
        Phase::Unbounded => return LpSolution::failed(SolveStatus::Unbounded, iterations),
        Phase::Optimal => {}
    }
    tab.refresh_basics();

    let mut primal: Vec<f64> = tab.x[..n].to_vec();
    for j in 0..n {
        let v = &mut primal[j];
        if (*v - lower[j]).abs() <= 1e-9 {
            *v = lower[j];
        } else if (*v - upper[j]).abs() <= 1e-9 {
            *v = upper[j];
        }
    }
    let duals = tab.d[n..n + m].to_vec();
    let objective = p.objective.value(&primal);
    LpSolution { status: SolveStatus::Optimal, primal, duals, objective, iterations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::VarKind;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    fn solve(p: &MilpProblem) -> LpSolution {
        let lo: Vec<f64> = p.variables.iter().map(|v| v.lower).collect();
        let hi: Vec<f64> = p.variables.iter().map(|v| v.upper).collect();
        solve_with_bounds(p, &lo, &hi, &opts())
    }

    #[test]
    fn single_lower_bound() {
        let mut p = MilpProblem::new();
        let x = p.add_var("x", f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous);
        p.add_constraint("c", vec![(x, 1.0)], Sense::Ge, 3.0);
        p.set_objective(vec![(x, 1.0)], 0.0);
        let s = solve(&p);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.primal[0] - 3.0).abs() < 1e-12);
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn facet_optimum() {
        let mut p = MilpProblem::new();
        let x = p.add_var("x", 0.0, 1.0, VarKind::Continuous);
        let y = p.add_var("y", 0.0, 1.0, VarKind::Continuous);
        p.add_constraint("c", vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
        p.set_objective(vec![(x, -1.0), (y, -1.0)], 0.0);
        let s = solve(&p);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective + 1.0).abs() < 1e-12);
        assert!((s.primal[0] + s.primal[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_bounds_infeasible() {
        let mut p = MilpProblem::new();
        let x = p.add_var("x", 0.0, f64::INFINITY, VarKind::Continuous);
        p.add_constraint("c", vec![(x, 1.0)], Sense::Le, -1.0);
        p.set_objective(vec![(x, 1.0)], 0.0);
        assert_eq!(solve(&p).status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut p = MilpProblem::new();
        let x = p.add_var("x", 0.0, f64::INFINITY, VarKind::Continuous);
        let y = p.add_var("y", 0.0, f64::INFINITY, VarKind::Continuous);
        p.add_constraint("c", vec![(x, 1.0), (y, -1.0)], Sense::Le, 2.0);
        p.set_objective(vec![(x, -1.0)], 0.0);
        assert_eq!(solve(&p).status, SolveStatus::Unbounded);
    }

    #[test]
    fn free_variable_and_equalities() {
        // x = 4 - y makes the objective 4 + y + constant
        let mut p = MilpProblem::new();
        let x = p.add_var("x", f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous);
        let y = p.add_var("y", 0.0, 10.0, VarKind::Continuous);
        p.add_constraint("sum", vec![(x, 1.0), (y, 1.0)], Sense::Eq, 4.0);
        p.add_constraint("diff", vec![(x, 1.0), (y, -1.0)], Sense::Ge, -2.0);
        p.set_objective(vec![(x, 1.0), (y, 2.0)], 1.5);
        let s = solve(&p);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.primal[0] - 4.0).abs() < 1e-12 && s.primal[1].abs() < 1e-12);
        assert!((s.objective - 5.5).abs() < 1e-12);
    }

    #[test]
    fn iteration_limit_reported() {
        let mut p = MilpProblem::new();
        let x = p.add_var("x", 0.0, f64::INFINITY, VarKind::Continuous);
        let y = p.add_var("y", 0.0, f64::INFINITY, VarKind::Continuous);
        p.add_constraint("a", vec![(x, 1.0), (y, 2.0)], Sense::Ge, 4.0);
        p.add_constraint("b", vec![(x, 3.0), (y, 1.0)], Sense::Ge, 6.0);
        p.set_objective(vec![(x, 1.0), (y, 1.0)], 0.0);
        let lo = vec![0.0; 2];
        let hi = vec![f64::INFINITY; 2];
        let o = SolverOptions { max_simplex_iters: 1, ..opts() };
        assert_eq!(solve_with_bounds(&p, &lo, &hi, &o).status, SolveStatus::IterationLimit);
        let s = solve_with_bounds(&p, &lo, &hi, &opts());
        assert!((s.objective - 2.8).abs() < 1e-12, "{}", s.objective);
    }
}
