//! Consolidated markdown summary of a run directory.
//!
//! Layout read and written by `report --run`:
//! `level{2,3}/{energy,demand}/costs.json` and `level{2,3}/energy/vdi.json`.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use crate::artifacts::{read_json, CostsReport, VdiFile};
use crate::engine::format_savings;
use crate::error::Result;

pub const LEVELS: [u8; 2] = [2, 3];
pub const OBJECTIVES: [&str; 2] = ["energy", "demand"];

pub fn costs_path(dir: &Path, level: u8, objective: &str) -> PathBuf {
    dir.join(format!("level{level}")).join(objective).join("costs.json")
}

pub fn vdi_path(dir: &Path, level: u8) -> PathBuf {
    dir.join(format!("level{level}")).join("energy").join("vdi.json")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub markdown: String,
    /// Expected artifacts that were absent or unreadable.
    pub missing: Vec<PathBuf>,
    /// Nothing at all was found.
    pub empty: bool,
}

fn level_name(level: u8) -> &'static str {
    if level == 3 {
        "Level III"
    } else {
        "Level II"
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.2}"))
}

/// Cost table: heuristic and both charger levels against both objectives.
/// Savings are measured against the heuristic row, which is the Level II
/// vehicle charged on arrival.
pub fn cost_table(costs: &[[Option<CostsReport>; 2]; 2]) -> String {
    let total = |l: usize, o: usize| costs[l][o].as_ref().map(|c| c.breakdown.total_usd);
    let heuristic = |o: usize| costs[0][o].as_ref().map(|c| c.baseline.total_usd);
    let mut out = String::new();
    out.push_str("| Type | Objective 1 ($) | Objective 2 ($) | Savings % (Objective 1) | Savings % (Objective 2) |\n");
    out.push_str("|---|---:|---:|---:|---:|\n");
    let _ = writeln!(out, "| Heuristic | {} | {} | - | - |", cell(heuristic(0)), cell(heuristic(1)));
    for (l, level) in LEVELS.iter().enumerate() {
        let pct = |o: usize| match (total(l, o), heuristic(o)) {
            (Some(t), Some(h)) => microgrid_core::schedule::savings(t, h).map_or("-".into(), format_savings),
            _ => "-".into(),
        };
        let _ = writeln!(out, "| {} | {} | {} | {} | {} |", level_name(*level), cell(total(l, 0)), cell(total(l, 1)), pct(0), pct(1));
    }
    out
}

/// VDI table at the building, PV, BESS and vehicle attachments.
pub fn vdi_table(vdi: &[Option<VdiFile>; 2]) -> String {
    let mut out = String::new();
    out.push_str("| Cost objective | PEV level | Building | PV | BESS | PEV |\n");
    out.push_str("|---|---|---:|---:|---:|---:|\n");
    for (l, level) in LEVELS.iter().enumerate() {
        let d = vdi[l].as_ref().and_then(|v| v.devices);
        let f = |x: Option<f64>| x.map_or("-".into(), |v| format!("{v:.5}"));
        let _ = writeln!(
            out,
            "| Energy + degradation | {} | {} | {} | {} | {} |",
            level_name(*level),
            f(d.map(|d| d.building)),
            f(d.map(|d| d.pv)),
            f(d.map(|d| d.bess)),
            f(d.map(|d| d.pev))
        );
    }
    out
}

fn load<T: for<'de> serde::Deserialize<'de>>(path: PathBuf, missing: &mut Vec<PathBuf>) -> Option<T> {
    match read_json(&path) {
        Ok(v) => Some(v),
        Err(_) => {
            missing.push(path);
            None
        }
    }
}

pub fn render(dir: &Path) -> Result<Rendered> {
    let mut missing = Vec::new();
    let mut costs: [[Option<CostsReport>; 2]; 2] = Default::default();
    for (l, level) in LEVELS.iter().enumerate() {
        for (o, obj) in OBJECTIVES.iter().enumerate() {
            costs[l][o] = load(costs_path(dir, *level, obj), &mut missing);
        }
    }
    let vdi: [Option<VdiFile>; 2] = [load(vdi_path(dir, 2), &mut missing), load(vdi_path(dir, 3), &mut missing)];
    let found = costs.iter().flatten().filter(|c| c.is_some()).count() + vdi.iter().filter(|v| v.is_some()).count();

    let mut md = String::from("# Microgrid scheduling report\n\n");
    if found == 0 {
        md.push_str("No artifacts found.\n");
        return Ok(Rendered { markdown: md, missing, empty: true });
    }
    md.push_str("## Daily cost comparison\n\n");
    md.push_str(&cost_table(&costs));
    md.push_str("\nObjective 1 is energy plus storage wear; objective 2 adds the peak demand charge.\n");
    md.push_str("\n## Voltage deviation index\n\n");
    md.push_str(&vdi_table(&vdi));
    md.push_str("\nPhase mean at each device attachment, nominal 1 pu unless stated in `vdi.json`.\n");
    if !missing.is_empty() {
        md.push_str("\n## Missing artifacts\n\n");
        for p in &missing {
            let _ = writeln!(md, "- `{}`", p.strip_prefix(dir).unwrap_or(p).display());
        }
    }
    Ok(Rendered { markdown: md, missing, empty: false })
}
