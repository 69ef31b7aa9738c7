//! Bundled LP/MILP engine: a bounded-variable primal simplex and a
//! best-first branch and bound over the binaries.

mod branch;
mod simplex;

use alloc::string::String;
use alloc::vec::Vec;

use crate::milp::{MilpProblem, Solution, VarKind};

pub use branch::solve_milp;
pub use simplex::LpSolution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub feasibility_tol: f64,
    /// Reduced-cost threshold for optimality.
    pub optimality_tol: f64,
    pub integrality_tol: f64,
    /// Nodes whose bound is within this fraction of the incumbent are pruned.
    pub relative_gap: f64,
    pub max_bb_nodes: usize,
    /// Per LP solve.
    pub max_simplex_iters: usize,
    /// Permutes pricing ties; 0 keeps column order.
    pub deterministic_seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            integrality_tol: 1e-6,
            relative_gap: 1e-6,
            max_bb_nodes: 100_000,
            max_simplex_iters: 50_000,
            deterministic_seed: 0,
        }
    }
}

/// Pluggable MILP engine.
pub trait MilpBackend {
    fn name(&self) -> &str;
    fn solve(&self, p: &MilpProblem, opts: &SolverOptions) -> Solution;
}

/// The engine shipped with this crate.
#[derive(Debug, Clone, Copy, Default)]
pub struct BundledSolver;

impl MilpBackend for BundledSolver {
    fn name(&self) -> &str {
        "bundled-simplex-bb"
    }

    fn solve(&self, p: &MilpProblem, opts: &SolverOptions) -> Solution {
        solve_milp(p, opts)
    }
}

/// Solves the continuous relaxation of `p`.
pub fn solve_lp(p: &MilpProblem, opts: &SolverOptions) -> LpSolution {
    let (lo, hi) = bounds_of(p);
    simplex::solve_with_bounds(p, &lo, &hi, opts)
}

fn bounds_of(p: &MilpProblem) -> (Vec<f64>, Vec<f64>) {
    p.variables.iter().map(|v| (v.lower, v.upper)).unzip()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Row,
    Bound,
    Integrality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Constraint index for rows, variable index otherwise.
    pub index: usize,
    pub name: String,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_violation(&self) -> f64 {
        self.violations.iter().map(|v| v.amount).fold(0.0, f64::max)
    }

    pub fn of_kind(&self, kind: ViolationKind) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.kind == kind)
    }
}

/// Lists every row, bound and integrality breach of `values` above `tol`.
pub fn check_feasibility(p: &MilpProblem, values: &[f64], tol: f64) -> FeasibilityReport {
    let mut violations = Vec::new();
    for (i, c) in p.constraints.iter().enumerate() {
        let amount = c.violation(values);
        if amount > tol {
            violations.push(Violation { kind: ViolationKind::Row, index: i, name: c.name.clone(), amount });
        }
    }
    for (j, v) in p.variables.iter().enumerate() {
        let x = values[j];
        let amount = (v.lower - x).max(x - v.upper).max(0.0);
        if amount > tol || x.is_nan() {
            violations.push(Violation { kind: ViolationKind::Bound, index: j, name: v.name.clone(), amount });
        }
        if v.kind == VarKind::Binary {
            let frac = (x - libm::round(x)).abs();
            if frac > tol {
                violations.push(Violation { kind: ViolationKind::Integrality, index: j, name: v.name.clone(), amount: frac });
            }
        }
    }
    FeasibilityReport { violations }
}
