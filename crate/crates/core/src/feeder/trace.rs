use alloc::string::String;
use alloc::vec::Vec;

use super::flow::{power_flow, FlowOptions, Injections};
use super::model::{FeederModel, Phase, PhaseSet, C64};
use super::FeederError;
use crate::milp::Schedule;

/// Where a device connects. Power is split evenly over `phases`.
#[derive(Debug, Clone, PartialEq)]
pub struct Attachment {
    pub bus: String,
    pub phases: PhaseSet,
    pub power_factor: f64,
}

impl Attachment {
    pub fn new(bus: &str, phases: PhaseSet) -> Self {
        Attachment { bus: bus.into(), phases, power_factor: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InjectionMap {
    pub pv: Attachment,
    pub bess: Attachment,
    pub pev: Attachment,
    /// HVAC, lighting and plug loads.
    pub building: Attachment,
}

impl Default for InjectionMap {
    fn default() -> Self {
        InjectionMap {
            pv: Attachment::new("671", PhaseSet::single(Phase::A)),
            bess: Attachment::new("671", PhaseSet::single(Phase::C)),
            pev: Attachment::new("611", PhaseSet::single(Phase::C)),
            building: Attachment::new("675", PhaseSet::ABC),
        }
    }
}

impl InjectionMap {
    fn devices(&self) -> [(&'static str, &Attachment); 4] {
        [("pv", &self.pv), ("bess", &self.bess), ("pev", &self.pev), ("building", &self.building)]
    }

    /// Resolves every attachment against the feeder.
    pub fn check(&self, f: &FeederModel) -> Result<(), FeederError> {
        for (device, a) in self.devices() {
            let bus = f.bus_index(&a.bus).ok_or_else(|| FeederError::UnknownAttachment { device, bus: a.bus.clone() })?;
            if a.phases.is_empty() || !a.phases.is_subset(f.buses[bus].phases) {
                return Err(FeederError::BadAttachment { device, reason: "phases not present at bus" });
            }
            if !(a.power_factor > 0.0 && a.power_factor <= 1.0) {
                return Err(FeederError::BadAttachment { device, reason: "power factor outside (0, 1]" });
            }
        }
        Ok(())
    }

    /// Net consumption of each device in one slot, kW (negative is generation).
    pub fn device_kw(sched: &Schedule, t: usize) -> [f64; 4] {
        let pv = sched.pv[t] - sched.pv_curtailed.get(t).copied().unwrap_or(0.0);
        let bess = sched.p_ch_b[t] - sched.p_dis_b[t];
        let pev = sched.p_g2v[t] - sched.p_v2g[t];
        let building = sched.p_grid[t] + pv - bess - pev;
        [-pv, bess, pev, building]
    }

    pub fn slot_injections(&self, f: &FeederModel, sched: &Schedule, t: usize) -> Result<Injections, FeederError> {
        self.check(f)?;
        let mut inj = Injections::none(f);
        for ((_, a), kw) in self.devices().into_iter().zip(Self::device_kw(sched, t)) {
            let bus = f.bus_index(&a.bus).expect("checked");
            let tan = libm::sqrt(1.0 - a.power_factor * a.power_factor) / a.power_factor;
            let share = kw / a.phases.len() as f64;
            for p in a.phases.iter() {
                inj.add(bus, p, C64::new(share, share * tan));
            }
        }
        Ok(inj)
    }
}

/// Per-unit complex voltages, `slots[t][bus][phase]`; zero on absent phases.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageTrace {
    pub buses: Vec<String>,
    pub phases: Vec<PhaseSet>,
    pub slots: Vec<Vec<[C64; 3]>>,
}

impl VoltageTrace {
    pub fn new(f: &FeederModel) -> Self {
        VoltageTrace {
            buses: f.buses.iter().map(|b| b.id.clone()).collect(),
            phases: f.buses.iter().map(|b| b.phases).collect(),
            slots: Vec::new(),
        }
    }

    pub fn push_flow(&mut self, f: &FeederModel, pf: &super::flow::PowerFlow) {
        let slot = (0..f.buses.len())
            .map(|b| {
                let mut row = [C64::new(0.0, 0.0); 3];
                for p in f.buses[b].phases.iter() {
                    row[p.index()] = pf.v_pu(b, p);
                }
                row
            })
            .collect();
        self.slots.push(slot);
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b == id)
    }

    pub fn magnitude(&self, slot: usize, bus: usize, phase: Phase) -> Option<f64> {
        self.phases[bus].contains(phase).then(|| self.slots[slot][bus][phase.index()].norm())
    }
}

/// Runs one power flow per slot with the schedule's devices added on top of
/// the feeder (or on an unloaded copy when `base_loads_on` is false).
pub fn time_series_flow(
    f: &FeederModel,
    map: &InjectionMap,
    sched: &Schedule,
    base_loads_on: bool,
) -> Result<VoltageTrace, FeederError> {
    map.check(f)?;
    let stripped;
    let net = if base_loads_on {
        f
    } else {
        stripped = f.without_loads();
        &stripped
    };
    let mut trace = VoltageTrace::new(net);
    let opts = FlowOptions::default();
    for t in 0..sched.len() {
        let inj = map.slot_injections(net, sched, t)?;
        let pf = power_flow(net, &inj, &opts).map_err(|e| FeederError::Slot { slot: t, source: alloc::boxed::Box::new(e) })?;
        trace.push_flow(net, &pf);
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VdiEntry {
    pub bus: String,
    pub phase: Phase,
    pub vdi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VdiReport {
    pub nominal_voltage_pu: f64,
    pub entries: Vec<VdiEntry>,
    /// Phase mean per bus, in bus order.
    pub bus_mean: Vec<(String, f64)>,
}

impl VdiReport {
    pub fn get(&self, bus: &str, phase: Phase) -> Option<f64> {
        self.entries.iter().find(|e| e.bus == bus && e.phase == phase).map(|e| e.vdi)
    }

    pub fn mean(&self, bus: &str) -> Option<f64> {
        self.bus_mean.iter().find(|(b, _)| b == bus).map(|&(_, v)| v)
    }
}

/// Root-mean-square deviation of |V| from `v_nominal` over the trace, per
/// bus and phase.
pub fn vdi(trace: &VoltageTrace, v_nominal: f64) -> Result<VdiReport, FeederError> {
    if trace.is_empty() {
        return Err(FeederError::EmptyTrace);
    }
    let t = trace.len() as f64;
    let mut entries = Vec::new();
    let mut bus_mean = Vec::new();
    for (b, id) in trace.buses.iter().enumerate() {
        let mut sum = 0.0;
        for p in trace.phases[b].iter() {
            let sq: f64 = (0..trace.len())
                .map(|s| {
                    let d = trace.slots[s][b][p.index()].norm() - v_nominal;
                    d * d
                })
                .sum();
            let v = libm::sqrt(sq / t);
            sum += v;
            entries.push(VdiEntry { bus: id.clone(), phase: p, vdi: v });
        }
        bus_mean.push((id.clone(), sum / trace.phases[b].len() as f64));
    }
    Ok(VdiReport { nominal_voltage_pu: v_nominal, entries, bus_mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn single(mags: &[f64]) -> VoltageTrace {
        VoltageTrace {
            buses: vec!["611".into()],
            phases: vec![PhaseSet::single(Phase::C)],
            slots: mags.iter().map(|&m| vec![[C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::from_polar(m, 2.0)]]).collect(),
        }
    }

    #[test]
    fn vdi_examples() {
        let r = vdi(&single(&[1.05; 7]), 1.0).unwrap();
        assert!((r.get("611", Phase::C).unwrap() - 0.05).abs() < 1e-12);
        let r = vdi(&single(&[0.98, 1.02]), 1.0).unwrap();
        assert!((r.get("611", Phase::C).unwrap() - 0.02).abs() < 1e-12);
        let r = vdi(&single(&[1.0; 3]), 1.0).unwrap();
        assert_eq!(r.get("611", Phase::C), Some(0.0));
        assert_eq!(r.mean("611"), Some(0.0));
        assert_eq!(r.get("611", Phase::A), None);
    }

    #[test]
    fn empty_trace_rejected() {
        assert_eq!(vdi(&single(&[]), 1.0), Err(FeederError::EmptyTrace));
    }

    #[test]
    fn device_split() {
        let s = Schedule {
            p_grid: vec![30.0],
            pv: vec![100.0],
            pv_curtailed: vec![0.0],
            p_ch_b: vec![20.0],
            p_dis_b: vec![0.0],
            p_g2v: vec![0.0],
            p_v2g: vec![7.0],
            ..Default::default()
        };
        let kw = InjectionMap::device_kw(&s, 0);
        assert_eq!(kw, [-100.0, 20.0, -7.0, 117.0]);
        assert_eq!(kw.iter().sum::<f64>(), 30.0);
    }
}
