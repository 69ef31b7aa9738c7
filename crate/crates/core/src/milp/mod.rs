//! The scheduling MILP: a solver-agnostic problem tableau, its compilation
//! from a scenario, and mapping solutions back to a dispatch schedule.

mod compile;
mod extract;
mod lp;
mod problem;

pub use compile::{compile, expected_constraints, expected_variables, ROWS_PER_SLOT};
pub use lp::{export_lp, parse_lp, LpError};
pub use extract::{check_consistent, extract_schedule, ExtractError, Schedule, COST_CONSISTENCY_TOL};
pub use problem::{
    Constraint, MilpProblem, Objective, Sense, Solution, SolveStatus, Symbol, VarKey, VarKind, Variable,
};
