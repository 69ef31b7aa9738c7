use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use super::problem::{MilpProblem, Solution, SolveStatus, Symbol, VarKey};
use crate::domain::Scenario;
use crate::schedule::{cost_breakdown, peak_demand, CostBreakdown};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractError {
    #[error("solution is not optimal ({0})")]
    NotOptimal(SolveStatus),
    #[error("solution has {got} values for {expected} variables")]
    WrongLength { expected: usize, got: usize },
    #[error("problem has no variable {0}")]
    MissingVariable(String),
    #[error("recomputed cost {recomputed} disagrees with solver objective {reported}")]
    Inconsistent { recomputed: f64, reported: f64 },
    #[error(transparent)]
    Cost(#[from] crate::schedule::CostError),
}

/// Per-slot dispatch. Powers in kW, SOC as a fraction, setpoint in degC,
/// lighting intensity in kW/m2.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    pub delta_t: f64,
    pub p_grid: Vec<f64>,
    pub p_ch_b: Vec<f64>,
    pub p_dis_b: Vec<f64>,
    pub p_g2v: Vec<f64>,
    pub p_v2g: Vec<f64>,
    pub soc_b: Vec<f64>,
    pub soc_ev: Vec<f64>,
    pub p_hvac: Vec<f64>,
    pub p_light: Vec<f64>,
    pub t_set: Vec<f64>,
    pub phi: Vec<f64>,
    pub b1: Vec<bool>,
    pub d1: Vec<bool>,
    pub e1: Vec<bool>,
    pub e2: Vec<bool>,
    /// Available PV, kW.
    pub pv: Vec<f64>,
    /// PV not used; only the heuristic baseline curtails.
    pub pv_curtailed: Vec<f64>,
    pub peak_grid_kw: f64,
    pub costs: CostBreakdown,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.p_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_grid.is_empty()
    }

    /// Continuous series of a slot-indexed family; binaries as 0/1.
    pub fn series(&self, symbol: Symbol) -> Vec<f64> {
        let bits = |v: &[bool]| v.iter().map(|&b| f64::from(u8::from(b))).collect();
        match symbol {
            Symbol::PGrid => self.p_grid.clone(),
            Symbol::PChB => self.p_ch_b.clone(),
            Symbol::PDisB => self.p_dis_b.clone(),
            Symbol::PG2v => self.p_g2v.clone(),
            Symbol::PV2g => self.p_v2g.clone(),
            Symbol::SocB => self.soc_b.clone(),
            Symbol::SocEv => self.soc_ev.clone(),
            Symbol::PHvac => self.p_hvac.clone(),
            Symbol::PLight => self.p_light.clone(),
            Symbol::TSet => self.t_set.clone(),
            Symbol::Phi => self.phi.clone(),
            Symbol::B1 => bits(&self.b1),
            Symbol::D1 => bits(&self.d1),
            Symbol::E1 => bits(&self.e1),
            Symbol::E2 => bits(&self.e2),
            Symbol::PPeak => alloc::vec![self.peak_grid_kw; self.len()],
        }
    }

    fn series_mut(&mut self, symbol: Symbol) -> Option<&mut Vec<f64>> {
        Some(match symbol {
            Symbol::PGrid => &mut self.p_grid,
            Symbol::PChB => &mut self.p_ch_b,
            Symbol::PDisB => &mut self.p_dis_b,
            Symbol::PG2v => &mut self.p_g2v,
            Symbol::PV2g => &mut self.p_v2g,
            Symbol::SocB => &mut self.soc_b,
            Symbol::SocEv => &mut self.soc_ev,
            Symbol::PHvac => &mut self.p_hvac,
            Symbol::PLight => &mut self.p_light,
            Symbol::TSet => &mut self.t_set,
            Symbol::Phi => &mut self.phi,
            _ => return None,
        })
    }

    /// Storage energy moved through chargers over the horizon, kWh
    /// (charge plus discharge for BESS, then vehicle).
    pub fn throughput_kwh(&self) -> (f64, f64) {
        let sum = |a: &[f64], b: &[f64]| a.iter().chain(b).sum::<f64>() * self.delta_t;
        (sum(&self.p_ch_b, &self.p_dis_b), sum(&self.p_g2v, &self.p_v2g))
    }

    /// Checks the physical invariants against the scenario and lists every
    /// breach: power balance (`balance_tol` kW), the SOC recursions
    /// (`soc_tol`), SOC boxes, mode exclusivity, vehicle gating and the
    /// terminal vehicle SOC.
    pub fn invariant_violations(&self, s: &Scenario, balance_tol: f64, soc_tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        let dt = s.grid.delta_t;
        let mut prev_b = s.bess.soc_initial;
        let mut prev_ev = s.pev.storage.soc_initial;
        let ev = &s.pev.storage;
        let act = 1e-6;
        for t in 0..self.len() {
            let supply = self.p_grid[t] + self.pv[t] - self.pv_curtailed[t] + self.p_dis_b[t] + self.p_v2g[t];
            let demand = self.p_ch_b[t] + self.p_g2v[t] + self.p_hvac[t] + self.p_light[t] + s.profile.misc_load[t];
            if (supply - demand).abs() > balance_tol {
                out.push(format!("slot {t}: power balance residual {}", supply - demand));
            }
            let want_b = prev_b + s.bess.charge_soc_gain(dt) * self.p_ch_b[t] - s.bess.discharge_soc_loss(dt) * self.p_dis_b[t];
            if (self.soc_b[t] - want_b).abs() > soc_tol {
                out.push(format!("slot {t}: BESS SOC recursion off by {}", self.soc_b[t] - want_b));
            }
            let want_ev = prev_ev + ev.charge_soc_gain(dt) * self.p_g2v[t] - ev.discharge_soc_loss(dt) * self.p_v2g[t];
            if (self.soc_ev[t] - want_ev).abs() > soc_tol {
                out.push(format!("slot {t}: vehicle SOC recursion off by {}", self.soc_ev[t] - want_ev));
            }
            if self.soc_b[t] < s.bess.soc_min - soc_tol || self.soc_b[t] > s.bess.soc_max + soc_tol {
                out.push(format!("slot {t}: BESS SOC {} out of bounds", self.soc_b[t]));
            }
            if self.soc_ev[t] < ev.soc_min - soc_tol || self.soc_ev[t] > ev.soc_max + soc_tol {
                out.push(format!("slot {t}: vehicle SOC {} out of bounds", self.soc_ev[t]));
            }
            if self.p_ch_b[t] > act && self.p_dis_b[t] > act {
                out.push(format!("slot {t}: BESS charges and discharges together"));
            }
            if self.p_g2v[t] > act && self.p_v2g[t] > act {
                out.push(format!("slot {t}: vehicle charges and discharges together"));
            }
            if self.b1[t] == self.d1[t] || self.e1[t] == self.e2[t] {
                out.push(format!("slot {t}: mode binaries not exclusive"));
            }
            if !s.pev.is_available(t) && (self.p_g2v[t] > 0.0 || self.p_v2g[t] > 0.0) {
                out.push(format!("slot {t}: vehicle power while unplugged"));
            }
            prev_b = self.soc_b[t];
            prev_ev = self.soc_ev[t];
        }
        if let Some(&last) = self.soc_ev.last() {
            if last < s.pev.soc_final_min - soc_tol {
                out.push(format!("terminal vehicle SOC {last} below {}", s.pev.soc_final_min));
            }
        }
        out
    }
}

/// Relative tolerance between the recomputed cost and the solver objective.
pub const COST_CONSISTENCY_TOL: f64 = 1e-6;

/// Maps an optimal solution back onto per-slot series and recomputes the
/// cost breakdown independently of the solver's objective.
pub fn extract_schedule(p: &MilpProblem, sol: &Solution, s: &Scenario) -> Result<Schedule, ExtractError> {
    if sol.status != SolveStatus::Optimal {
        return Err(ExtractError::NotOptimal(sol.status));
    }
    if sol.values.len() != p.num_vars() {
        return Err(ExtractError::WrongLength { expected: p.num_vars(), got: sol.values.len() });
    }
    let n = s.grid.n_slots;
    let mut sched = Schedule { delta_t: s.grid.delta_t, pv: s.pv_series(), pv_curtailed: alloc::vec![0.0; n], ..Default::default() };
    for sym in Symbol::PER_SLOT {
        let mut vals = Vec::with_capacity(n);
        for t in 0..n {
            let key = VarKey::at(sym, t);
            let j = p.var(key).ok_or_else(|| ExtractError::MissingVariable(format!("{key}")))?;
            vals.push(sol.values[j]);
        }
        match sym {
            Symbol::B1 => sched.b1 = vals.iter().map(|&x| x > 0.5).collect(),
            Symbol::D1 => sched.d1 = vals.iter().map(|&x| x > 0.5).collect(),
            Symbol::E1 => sched.e1 = vals.iter().map(|&x| x > 0.5).collect(),
            Symbol::E2 => sched.e2 = vals.iter().map(|&x| x > 0.5).collect(),
            other => *sched.series_mut(other).expect("continuous family") = vals,
        }
    }
    sched.peak_grid_kw = peak_demand(&sched.p_grid).map_or(0.0, |(kw, _)| kw);
    let costs = cost_breakdown(&sched, s)?;
    check_consistent(costs.total_usd, sol.objective_value)?;
    sched.costs = costs;
    Ok(sched)
}

pub fn check_consistent(recomputed: f64, reported: f64) -> Result<(), ExtractError> {
    let scale = recomputed.abs().max(reported.abs()).max(1.0);
    if (recomputed - reported).abs() <= COST_CONSISTENCY_TOL * scale {
        Ok(())
    } else {
        Err(ExtractError::Inconsistent { recomputed, reported })
    }
}
