//! Microgrid scheduling core: scenario types, the scheduling MILP, a bundled
//! simplex/branch-and-bound solver, cost accounting and a three-phase
//! distribution feeder power flow.
#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod domain;
pub mod feeder;
pub mod milp;
pub mod presets;
pub mod schedule;
pub mod solver;

pub use domain::{validate_scenario, Scenario, ValidScenario, ValidationErrors};
pub use milp::{compile, extract_schedule, MilpProblem, Schedule, Solution, SolveStatus};
pub use schedule::{cost_breakdown, heuristic_baseline, savings, CostBreakdown};
pub use solver::{solve_lp, solve_milp, BundledSolver, MilpBackend, SolverOptions};
