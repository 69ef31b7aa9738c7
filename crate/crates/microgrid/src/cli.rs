//! Command-line surface. `main.rs` parses [`Cli`] and hands it to [`run`].

use std::fmt::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use microgrid_core::domain::Scenario;
use microgrid_core::feeder::{parse_feeder, time_series_flow, vdi, FeederModel, InjectionMap, Phase};
use microgrid_core::milp::export_lp;
use microgrid_core::schedule::peak_demand;
use microgrid_core::solver::SolverOptions;

use crate::artifacts::{self, CostsReport, VdiFile};
use crate::config::{Config, Objective};
use crate::engine::{format_savings, run_sweep, solve_scenario, AxisKind, Solved, SweepSpec};
use crate::error::Result;
use crate::report;

pub const IEEE13: &str = include_str!("../fixtures/ieee13.feeder");
pub const OUT_DIR_ENV: &str = "MICROGRID_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "microgrid", version, about = "Schedule a building microgrid and study its feeder impact")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize one day and compare against the heuristic baseline.
    Solve(SolveArgs),
    /// Re-solve across one scenario axis.
    Sweep(SweepArgs),
    /// Run the time-series power flow for a schedule and report VDI.
    Feeder(FeederArgs),
    /// Render the cost and VDI tables from a run directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario TOML; defaults to the built-in base case.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Profile CSV, overriding the one named in the config.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub objective: Option<Objective>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub pev_level: Option<u8>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out_dir: PathBuf,
    /// Pricing tie-break permutation; 0 keeps index order.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Also write the MILP as `problem.lp`.
    #[arg(long)]
    pub export_lp: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub axis: AxisKind,
    /// Comma-separated: fractions, `center:half_width`, tariff names,
    /// `sunny`/`cloudy`, or `2`/`3`.
    #[arg(long)]
    pub values: String,
}

#[derive(Debug, Args)]
pub struct FeederArgs {
    #[command(flatten)]
    pub common: Common,
    /// Schedule CSV; defaults to `schedule.csv` in the output directory.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Feeder file; defaults to the bundled IEEE 13-bus feeder.
    #[arg(long)]
    pub feeder: Option<PathBuf>,
    /// Nominal voltage for VDI, pu.
    #[arg(long, default_value_t = 1.0)]
    pub vnom: f64,
    /// Drop the feeder's own spot and distributed loads.
    #[arg(long)]
    pub without_base_loads: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: Common,
    /// Produce the artifacts first: both charger levels, both objectives,
    /// and a feeder run per level.
    #[arg(long)]
    pub run: bool,
    #[arg(long)]
    pub feeder: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub vnom: f64,
}

/// What a command prints: lines for stdout and warnings for stderr.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Output {
    pub stdout: String,
    pub warnings: Vec<String>,
}

impl Common {
    pub fn config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(p) = &self.profile {
            cfg.profile = Some(p.clone());
        }
        if let Some(o) = self.objective {
            cfg.objective = o;
        }
        if let Some(l) = self.pev_level {
            cfg.pev.level = Some(l);
        }
        Ok(cfg)
    }

    pub fn options(&self) -> SolverOptions {
        SolverOptions { deterministic_seed: self.seed, ..SolverOptions::default() }
    }
}

pub fn run(cli: Cli) -> Result<Output> {
    match cli.command {
        Command::Solve(a) => solve(&a),
        Command::Sweep(a) => sweep(&a),
        Command::Feeder(a) => feeder(&a),
        Command::Report(a) => report_cmd(&a),
    }
}

fn write_solved(dir: &Path, r: &Solved, level: u8) -> Result<()> {
    artifacts::write_file(&dir.join("schedule.csv"), &artifacts::schedule_csv(&r.schedule, r.scenario.grid.start_hour))?;
    artifacts::write_file(&dir.join("costs.json"), &artifacts::to_json(&CostsReport::new(r, level)))
}

fn summary(out: &mut String, r: &Solved) {
    let (peak, slot) = peak_demand(&r.schedule.p_grid).unwrap_or((0.0, 0));
    let _ = writeln!(out, "total cost      {:.2} $", r.schedule.costs.total_usd);
    let _ = writeln!(out, "peak demand     {peak:.2} kW (slot {slot})");
    let _ = writeln!(out, "baseline cost   {:.2} $", r.baseline.costs.total_usd);
    match r.savings_pct() {
        Some(p) => {
            let _ = writeln!(out, "savings         {} %", format_savings(p));
        }
        None => {
            let _ = writeln!(out, "savings         n/a (baseline costs nothing)");
        }
    }
}

pub fn solve(a: &SolveArgs) -> Result<Output> {
    let cfg = a.common.config()?;
    let level = cfg.level()?.number();
    let s = cfg.scenario()?;
    let dir = &a.common.out_dir;
    let r = solve_scenario(s, &a.common.options())?;
    write_solved(dir, &r, level)?;
    if a.export_lp {
        artifacts::write_file(&dir.join("problem.lp"), export_lp(&r.problem).as_bytes())?;
    }
    let mut out = Output::default();
    summary(&mut out.stdout, &r);
    Ok(out)
}

pub fn sweep(a: &SweepArgs) -> Result<Output> {
    let spec = SweepSpec::parse(a.axis, &a.values)?;
    let base = a.common.config()?.scenario()?;
    let rep = run_sweep(&base, &spec, &a.common.options());
    let dir = &a.common.out_dir;
    artifacts::write_file(&dir.join("sweep.csv"), &artifacts::sweep_csv(&rep))?;
    artifacts::write_file(&dir.join("sweep_long.csv"), &artifacts::sweep_long_csv(&rep))?;
    let mut out = Output::default();
    for row in &rep.rows {
        match &row.outcome {
            Ok(r) => {
                let savings = r.savings_pct().map_or("n/a".into(), format_savings);
                let peak = peak_demand(&r.schedule.p_grid).map_or(0.0, |p| p.0);
                let _ = writeln!(
                    out.stdout,
                    "{}={}  total {:.2} $  peak {:.2} kW  savings {} %",
                    rep.axis.name(),
                    row.value,
                    r.schedule.costs.total_usd,
                    peak,
                    savings
                );
            }
            Err(e) => out.warnings.push(format!("{}={} failed: {e}", rep.axis.name(), row.value)),
        }
    }
    let mut findings = String::new();
    for f in &rep.findings {
        let line = format!("[{}] {}: {}\n", if f.holds { "holds" } else { "VIOLATED" }, f.claim, f.detail);
        out.stdout.push_str(&line);
        findings.push_str(&line);
    }
    artifacts::write_file(&dir.join("sweep_findings.txt"), findings.as_bytes())?;
    Ok(out)
}

pub fn load_feeder(path: Option<&Path>) -> Result<FeederModel> {
    match path {
        Some(p) => {
            let text = artifacts::read_file(p)?;
            Ok(parse_feeder(&text)?)
        }
        None => Ok(parse_feeder(IEEE13)?),
    }
}

/// Feeder study of `sched`; writes `voltages.csv` and `vdi.json` into `dir`.
pub fn feeder_study(
    f: &FeederModel,
    map: &InjectionMap,
    sched: &microgrid_core::milp::Schedule,
    base_loads: bool,
    vnom: f64,
    dir: &Path,
) -> Result<VdiFile> {
    let trace = time_series_flow(f, map, sched, base_loads)?;
    let r = vdi(&trace, vnom)?;
    let file = VdiFile::new(&r, trace.len(), map);
    artifacts::write_file(&dir.join("voltages.csv"), &artifacts::voltages_csv(&trace))?;
    artifacts::write_file(&dir.join("vdi.json"), &artifacts::to_json(&file))?;
    Ok(file)
}

fn print_vdi(out: &mut String, file: &VdiFile) {
    for bus in ["611", "671", "675"] {
        let phases: Vec<String> = file
            .entries
            .iter()
            .filter(|e| e.bus == bus)
            .map(|e| format!("{} {:.5}", e.phase, e.vdi))
            .collect();
        let mean = file.bus_mean.get(bus).map_or("-".into(), |m| format!("{m:.5}"));
        let _ = writeln!(out, "VDI {bus}: mean {mean}  ({})", phases.join(", "));
    }
}

pub fn feeder(a: &FeederArgs) -> Result<Output> {
    let cfg = a.common.config()?;
    let map = cfg.feeder.injection_map()?;
    let dir = &a.common.out_dir;
    let sched_path = a.schedule.clone().unwrap_or_else(|| dir.join("schedule.csv"));
    let sched = artifacts::load_schedule(&sched_path)?;
    let f = load_feeder(a.feeder.as_deref())?;
    let file = feeder_study(&f, &map, &sched, !a.without_base_loads, a.vnom, dir)?;
    let mut out = Output::default();
    print_vdi(&mut out.stdout, &file);
    Ok(out)
}

fn full_run(a: &ReportArgs, dir: &Path) -> Result<()> {
    let cfg = a.common.config()?;
    let map = cfg.feeder.injection_map()?;
    let f = load_feeder(a.feeder.as_deref())?;
    let opts = a.common.options();
    for level in report::LEVELS {
        for objective in [Objective::Energy, Objective::Demand] {
            let mut c = cfg.clone();
            c.pev.level = Some(level);
            c.objective = objective;
            let s: Scenario = c.scenario()?;
            let r = solve_scenario(s, &opts)?;
            let name = if objective == Objective::Energy { "energy" } else { "demand" };
            let sub = dir.join(format!("level{level}")).join(name);
            write_solved(&sub, &r, level)?;
            if objective == Objective::Energy {
                feeder_study(&f, &map, &r.schedule, true, a.vnom, &sub)?;
            }
        }
    }
    Ok(())
}

pub fn report_cmd(a: &ReportArgs) -> Result<Output> {
    let dir = &a.common.out_dir;
    if a.run {
        full_run(a, dir)?;
    }
    let rendered = report::render(dir)?;
    artifacts::write_file(&dir.join("report.md"), rendered.markdown.as_bytes())?;
    let mut out = Output { stdout: rendered.markdown.clone(), warnings: Vec::new() };
    if rendered.empty {
        out.warnings.push(format!("no artifacts under {}; wrote an empty report", dir.display()));
    } else {
        out.warnings.extend(rendered.missing.iter().map(|p| format!("missing artifact {}", p.display())));
    }
    Ok(out)
}

/// Phase-C VDI at the vehicle node from a written `vdi.json`.
pub fn pev_node_vdi(file: &VdiFile) -> Option<f64> {
    file.entries.iter().find(|e| e.bus == "611" && e.phase == Phase::C.to_string()).map(|e| e.vdi)
}

