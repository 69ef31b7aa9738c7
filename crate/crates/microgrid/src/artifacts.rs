//! Output files: `costs.json`, `schedule.csv`, `sweep.csv`, `sweep_long.csv`,
//! `voltages.csv`, `vdi.json`. Column and key order is fixed and no field
//! depends on wall-clock time, so identical runs write identical bytes.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use microgrid_core::feeder::{InjectionMap, VdiReport, VoltageTrace};
use microgrid_core::milp::Schedule;
use microgrid_core::schedule::{peak_demand, CostBreakdown};
use serde::{Deserialize, Serialize};

use crate::engine::{format_savings, Solved, SweepReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Costs {
    pub energy_usd: f64,
    pub demand_usd: f64,
    pub bess_degradation_usd: f64,
    pub pev_degradation_usd: f64,
    pub total_usd: f64,
}

impl From<CostBreakdown> for Costs {
    fn from(c: CostBreakdown) -> Self {
        Costs {
            energy_usd: c.energy_usd,
            demand_usd: c.demand_usd,
            bess_degradation_usd: c.bess_degradation_usd,
            pev_degradation_usd: c.pev_degradation_usd,
            total_usd: c.total_usd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostsReport {
    pub objective: String,
    pub pev_level: u8,
    pub status: String,
    pub breakdown: Costs,
    pub peak_kw: f64,
    pub peak_slot: usize,
    pub baseline: Costs,
    pub baseline_peak_kw: f64,
    /// One decimal; absent when the baseline costs nothing.
    pub savings_pct: Option<String>,
    pub bess_throughput_kwh: f64,
    pub pev_throughput_kwh: f64,
    pub bb_nodes: usize,
    pub relative_gap: f64,
}

impl CostsReport {
    pub fn new(r: &Solved, pev_level: u8) -> Self {
        let (peak_kw, peak_slot) = peak_demand(&r.schedule.p_grid).unwrap_or((0.0, 0));
        let (bess, pev) = r.schedule.throughput_kwh();
        CostsReport {
            objective: r.scenario.objective_kind.to_string(),
            pev_level,
            status: r.solution.status.to_string(),
            breakdown: r.schedule.costs.into(),
            peak_kw,
            peak_slot,
            baseline: r.baseline.costs.into(),
            baseline_peak_kw: peak_demand(&r.baseline.p_grid).map_or(0.0, |p| p.0),
            savings_pct: r.savings_pct().map(format_savings),
            bess_throughput_kwh: bess,
            pev_throughput_kwh: pev,
            bb_nodes: r.solution.nodes,
            relative_gap: r.solution.gap,
        }
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("plain data serializes");
    out.push(b'\n');
    out
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_file(path)?).map_err(|e| Error::input(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleRow {
    slot: usize,
    hour: f64,
    p_grid: f64,
    pv: f64,
    pv_curtailed: f64,
    p_ch_b: f64,
    p_dis_b: f64,
    p_g2v: f64,
    p_v2g: f64,
    soc_b: f64,
    soc_ev: f64,
    p_hvac: f64,
    p_light: f64,
    t_set: f64,
    phi: f64,
    b1: u8,
    d1: u8,
    e1: u8,
    e2: u8,
}

fn csv_bytes(f: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    f(&mut w).expect("writing to memory");
    w.into_inner().expect("flush to memory")
}

/// `slot`, hour of day, then one column per decision series.
pub fn schedule_csv(sched: &Schedule, start_hour: f64) -> Vec<u8> {
    let at = |v: &[f64], t: usize| v.get(t).copied().unwrap_or(0.0);
    let bit = |v: &[bool], t: usize| u8::from(v.get(t).copied().unwrap_or(false));
    csv_bytes(|w| {
        for t in 0..sched.len() {
            w.serialize(ScheduleRow {
                slot: t,
                hour: start_hour + t as f64 * sched.delta_t,
                p_grid: sched.p_grid[t],
                pv: at(&sched.pv, t),
                pv_curtailed: at(&sched.pv_curtailed, t),
                p_ch_b: sched.p_ch_b[t],
                p_dis_b: sched.p_dis_b[t],
                p_g2v: sched.p_g2v[t],
                p_v2g: sched.p_v2g[t],
                soc_b: at(&sched.soc_b, t),
                soc_ev: at(&sched.soc_ev, t),
                p_hvac: at(&sched.p_hvac, t),
                p_light: at(&sched.p_light, t),
                t_set: at(&sched.t_set, t),
                phi: at(&sched.phi, t),
                b1: bit(&sched.b1, t),
                d1: bit(&sched.d1, t),
                e1: bit(&sched.e1, t),
                e2: bit(&sched.e2, t),
            })?;
        }
        Ok(())
    })
}

/// Reads a schedule written by [`schedule_csv`]. Costs are left at zero.
pub fn read_schedule(reader: impl Read, origin: &Path) -> Result<Schedule> {
    let mut s = Schedule::default();
    let mut hours = Vec::new();
    for (i, rec) in csv::Reader::from_reader(reader).deserialize::<ScheduleRow>().enumerate() {
        let r = rec.map_err(|e| Error::input(origin, format!("row {}: {e}", i + 1)))?;
        if r.slot != i {
            return Err(Error::input(origin, format!("row {}: expected slot {i}, found {}", i + 1, r.slot)));
        }
        hours.push(r.hour);
        s.p_grid.push(r.p_grid);
        s.pv.push(r.pv);
        s.pv_curtailed.push(r.pv_curtailed);
        s.p_ch_b.push(r.p_ch_b);
        s.p_dis_b.push(r.p_dis_b);
        s.p_g2v.push(r.p_g2v);
        s.p_v2g.push(r.p_v2g);
        s.soc_b.push(r.soc_b);
        s.soc_ev.push(r.soc_ev);
        s.p_hvac.push(r.p_hvac);
        s.p_light.push(r.p_light);
        s.t_set.push(r.t_set);
        s.phi.push(r.phi);
        s.b1.push(r.b1 != 0);
        s.d1.push(r.d1 != 0);
        s.e1.push(r.e1 != 0);
        s.e2.push(r.e2 != 0);
    }
    if s.is_empty() {
        return Err(Error::input(origin, "schedule has no rows"));
    }
    s.delta_t = if hours.len() > 1 { hours[1] - hours[0] } else { 0.25 };
    s.peak_grid_kw = peak_demand(&s.p_grid).map_or(0.0, |p| p.0);
    Ok(s)
}

pub fn load_schedule(path: &Path) -> Result<Schedule> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_schedule(file, path)
}

#[derive(Debug, Serialize)]
struct SweepCsvRow {
    axis: &'static str,
    value: String,
    status: String,
    total_usd: Option<f64>,
    recomputed_total_usd: Option<f64>,
    peak_kw: Option<f64>,
    baseline_total_usd: Option<f64>,
    savings_pct: Option<String>,
    bess_throughput_kwh: Option<f64>,
    pev_throughput_kwh: Option<f64>,
    error: String,
}

pub fn sweep_csv(r: &SweepReport) -> Vec<u8> {
    csv_bytes(|w| {
        for row in &r.rows {
            let mut out = SweepCsvRow {
                axis: r.axis.name(),
                value: row.value.to_string(),
                status: String::new(),
                total_usd: None,
                recomputed_total_usd: row.recomputed_total,
                peak_kw: None,
                baseline_total_usd: None,
                savings_pct: None,
                bess_throughput_kwh: None,
                pev_throughput_kwh: None,
                error: String::new(),
            };
            match &row.outcome {
                Ok(s) => {
                    let (bess, pev) = s.schedule.throughput_kwh();
                    out.status = s.solution.status.to_string();
                    out.total_usd = Some(s.schedule.costs.total_usd);
                    out.peak_kw = peak_demand(&s.schedule.p_grid).map(|p| p.0);
                    out.baseline_total_usd = Some(s.baseline.costs.total_usd);
                    out.savings_pct = s.savings_pct().map(format_savings);
                    out.bess_throughput_kwh = Some(bess);
                    out.pev_throughput_kwh = Some(pev);
                }
                Err(e) => {
                    out.status = "failed".into();
                    out.error = e.clone();
                }
            }
            w.serialize(out)?;
        }
        Ok(())
    })
}

/// Long format for plotting: `axis,value,slot,series,y`.
pub fn sweep_long_csv(r: &SweepReport) -> Vec<u8> {
    csv_bytes(|w| {
        w.write_record(["axis", "value", "slot", "series", "y"])?;
        for row in &r.rows {
            let Ok(s) = &row.outcome else { continue };
            let sched = &s.schedule;
            let series: [(&str, &[f64]); 8] = [
                ("p_grid", &sched.p_grid),
                ("p_ch_b", &sched.p_ch_b),
                ("p_dis_b", &sched.p_dis_b),
                ("p_g2v", &sched.p_g2v),
                ("p_v2g", &sched.p_v2g),
                ("soc_b", &sched.soc_b),
                ("soc_ev", &sched.soc_ev),
                ("p_light", &sched.p_light),
            ];
            let value = row.value.to_string();
            for (name, ys) in series {
                for (t, y) in ys.iter().enumerate() {
                    w.write_record([r.axis.name(), &value, &t.to_string(), name, &y.to_string()])?;
                }
            }
        }
        Ok(())
    })
}

pub fn voltages_csv(trace: &VoltageTrace) -> Vec<u8> {
    csv_bytes(|w| {
        w.write_record(["slot", "bus", "phase", "v_pu"])?;
        for t in 0..trace.len() {
            for (b, id) in trace.buses.iter().enumerate() {
                for p in trace.phases[b].iter() {
                    let v = trace.magnitude(t, b, p).expect("phase present");
                    w.write_record([&t.to_string(), id, &p.to_string(), &v.to_string()])?;
                }
            }
        }
        Ok(())
    })
}

/// VDI at the four device attachments: phase mean over each attachment's phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceVdi {
    pub building: f64,
    pub pv: f64,
    pub bess: f64,
    pub pev: f64,
}

impl DeviceVdi {
    pub fn new(r: &VdiReport, map: &InjectionMap) -> Option<Self> {
        let at = |a: &microgrid_core::feeder::Attachment| {
            let vals: Option<Vec<f64>> = a.phases.iter().map(|p| r.get(&a.bus, p)).collect();
            vals.map(|v| v.iter().sum::<f64>() / v.len() as f64)
        };
        Some(DeviceVdi { building: at(&map.building)?, pv: at(&map.pv)?, bess: at(&map.bess)?, pev: at(&map.pev)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdiEntryOut {
    pub bus: String,
    pub phase: String,
    pub vdi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdiFile {
    pub nominal_voltage_pu: f64,
    pub slots: usize,
    pub devices: Option<DeviceVdi>,
    pub bus_mean: BTreeMap<String, f64>,
    pub entries: Vec<VdiEntryOut>,
}

impl VdiFile {
    pub fn new(r: &VdiReport, slots: usize, map: &InjectionMap) -> Self {
        VdiFile {
            nominal_voltage_pu: r.nominal_voltage_pu,
            slots,
            devices: DeviceVdi::new(r, map),
            bus_mean: r.bus_mean.iter().cloned().collect(),
            entries: r.entries.iter().map(|e| VdiEntryOut { bus: e.bus.clone(), phase: e.phase.to_string(), vdi: e.vdi }).collect(),
        }
    }
}
