//! File formats, scenario engine and command-line surface for the
//! `microgrid-core` scheduler: TOML scenarios, profile and schedule CSVs,
//! LP export, sensitivity sweeps, feeder studies and markdown reports.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod profile;
pub mod report;

pub use config::Config;
pub use engine::{run_sweep, solve_scenario, Solved, SweepReport, SweepSpec};
pub use error::{Error, Result};
