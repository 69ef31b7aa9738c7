use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::problem::{MilpProblem, Sense, Symbol, VarKey, VarKind};
use crate::domain::{ObjectiveKind, StorageParams, ValidScenario};

const INF: f64 = f64::INFINITY;

/// Constraint rows contributed by each slot, excluding the demand epigraph.
pub const ROWS_PER_SLOT: usize = 11;

/// Variable count of a compiled `n`-slot scenario.
pub fn expected_variables(n: usize, objective: ObjectiveKind) -> usize {
    Symbol::PER_SLOT.len() * n + usize::from(objective == ObjectiveKind::WithDemandCharge)
}

/// Row count of a compiled `n`-slot scenario.
pub fn expected_constraints(n: usize, objective: ObjectiveKind, bess_terminal: bool) -> usize {
    let epigraph = if objective == ObjectiveKind::WithDemandCharge { n } else { 0 };
    ROWS_PER_SLOT * n + epigraph + 1 + usize::from(bess_terminal)
}

struct Storage<'a> {
    params: &'a StorageParams,
    power_in: Symbol,
    power_out: Symbol,
    soc: Symbol,
    mode_in: Symbol,
    mode_out: Symbol,
    tag: &'static str,
}

/// Builds the MILP for a validated scenario.
///
/// Per slot `t`, in this order: the SOC recursion, charge and discharge caps
/// gated by the mode binaries, and the mode exclusivity equality for the BESS,
/// then the same four rows for the vehicle, the HVAC and lighting equalities,
/// and the power balance. With the demand objective, a `peak_t` epigraph row
/// follows each slot. The vehicle's end-of-horizon SOC floor (and the optional
/// BESS floor) close the row list.
pub fn compile(s: &ValidScenario) -> MilpProblem {
    let n = s.grid.n_slots;
    let dt = s.grid.delta_t;
    let demand = s.objective_kind == ObjectiveKind::WithDemandCharge;
    let pv = s.pv_series();
    let mut p = MilpProblem::new();

    for t in 0..n {
        let plugged = s.pev.is_available(t);
        let ev_rate = |r: f64| if plugged { r } else { 0.0 };
        let ev = &s.pev.storage;
        let grid_lo = if s.allow_export { -INF } else { 0.0 };
        let k = |sym| VarKey::at(sym, t);
        p.add_keyed_var(k(Symbol::PGrid), grid_lo, INF, VarKind::Continuous);
        p.add_keyed_var(k(Symbol::PChB), 0.0, s.bess.max_charge_kw, VarKind::Continuous);
        p.add_keyed_var(k(Symbol::PDisB), 0.0, s.bess.max_discharge_kw, VarKind::Continuous);
        p.add_keyed_var(k(Symbol::PG2v), 0.0, ev_rate(ev.max_charge_kw), VarKind::Continuous);
        p.add_keyed_var(k(Symbol::PV2g), 0.0, ev_rate(ev.max_discharge_kw), VarKind::Continuous);
        p.add_keyed_var(k(Symbol::SocB), s.bess.soc_min, s.bess.soc_max, VarKind::Continuous);
        p.add_keyed_var(k(Symbol::SocEv), ev.soc_min, ev.soc_max, VarKind::Continuous);
        p.add_keyed_var(k(Symbol::PHvac), 0.0, INF, VarKind::Continuous);
        p.add_keyed_var(k(Symbol::PLight), 0.0, INF, VarKind::Continuous);
        p.add_keyed_var(k(Symbol::TSet), s.hvac.t_set_min, s.hvac.t_set_max, VarKind::Continuous);
        p.add_keyed_var(k(Symbol::Phi), s.lighting.phi_min, s.lighting.phi_max, VarKind::Continuous);
        p.add_keyed_var(k(Symbol::B1), 0.0, 1.0, VarKind::Binary);
        p.add_keyed_var(k(Symbol::D1), 0.0, 1.0, VarKind::Binary);
        if plugged {
            p.add_keyed_var(k(Symbol::E1), 0.0, 1.0, VarKind::Binary);
            p.add_keyed_var(k(Symbol::E2), 0.0, 1.0, VarKind::Binary);
        } else {
            p.add_keyed_var(k(Symbol::E1), 1.0, 1.0, VarKind::Binary);
            p.add_keyed_var(k(Symbol::E2), 0.0, 0.0, VarKind::Binary);
        }
    }
    let peak = demand.then(|| p.add_keyed_var(VarKey::scalar(Symbol::PPeak), 0.0, INF, VarKind::Continuous));

    let v = |p: &MilpProblem, sym, t| p.var(VarKey::at(sym, t)).expect("declared above");
    let storages = [
        Storage {
            params: &s.bess,
            power_in: Symbol::PChB,
            power_out: Symbol::PDisB,
            soc: Symbol::SocB,
            mode_in: Symbol::B1,
            mode_out: Symbol::D1,
            tag: "b",
        },
        Storage {
            params: &s.pev.storage,
            power_in: Symbol::PG2v,
            power_out: Symbol::PV2g,
            soc: Symbol::SocEv,
            mode_in: Symbol::E1,
            mode_out: Symbol::E2,
            tag: "ev",
        },
    ];

    for t in 0..n {
        for st in &storages {
            let gain = st.params.charge_soc_gain(dt);
            let loss = st.params.discharge_soc_loss(dt);
            let soc = v(&p, st.soc, t);
            let pin = v(&p, st.power_in, t);
            let pout = v(&p, st.power_out, t);
            let mut row = vec![(soc, 1.0), (pin, -gain), (pout, loss)];
            let rhs = if t == 0 {
                st.params.soc_initial
            } else {
                row.push((v(&p, st.soc, t - 1), -1.0));
                0.0
            };
            p.add_constraint(format!("soc_{}_{t}", st.tag), row, Sense::Eq, rhs);

            let m_in = v(&p, st.mode_in, t);
            let m_out = v(&p, st.mode_out, t);
            p.add_constraint(
                format!("charge_cap_{}_{t}", st.tag),
                vec![(pin, 1.0), (m_in, -st.params.max_charge_kw)],
                Sense::Le,
                0.0,
            );
            p.add_constraint(
                format!("discharge_cap_{}_{t}", st.tag),
                vec![(pout, 1.0), (m_out, -st.params.max_discharge_kw)],
                Sense::Le,
                0.0,
            );
            p.add_constraint(format!("mode_{}_{t}", st.tag), vec![(m_in, 1.0), (m_out, 1.0)], Sense::Eq, 1.0);
        }

        let h = &s.hvac;
        p.add_constraint(
            format!("hvac_{t}"),
            vec![(v(&p, Symbol::PHvac, t), 1.0), (v(&p, Symbol::TSet, t), -h.slope)],
            Sense::Eq,
            h.intercept - h.slope * s.profile.t_out[t],
        );
        p.add_constraint(
            format!("lighting_{t}"),
            vec![(v(&p, Symbol::PLight, t), 1.0), (v(&p, Symbol::Phi, t), -s.lighting.power_per_phi())],
            Sense::Eq,
            0.0,
        );
        p.add_constraint(
            format!("balance_{t}"),
            vec![
                (v(&p, Symbol::PGrid, t), 1.0),
                (v(&p, Symbol::PChB, t), -1.0),
                (v(&p, Symbol::PDisB, t), 1.0),
                (v(&p, Symbol::PG2v, t), -1.0),
                (v(&p, Symbol::PV2g, t), 1.0),
                (v(&p, Symbol::PHvac, t), -1.0),
                (v(&p, Symbol::PLight, t), -1.0),
            ],
            Sense::Eq,
            s.profile.misc_load[t] - pv[t],
        );
        if let Some(pk) = peak {
            p.add_constraint(format!("peak_{t}"), vec![(pk, 1.0), (v(&p, Symbol::PGrid, t), -1.0)], Sense::Ge, 0.0);
        }
    }

    p.add_constraint(
        "pev_terminal",
        vec![(v(&p, Symbol::SocEv, n - 1), 1.0)],
        Sense::Ge,
        s.pev.soc_final_min,
    );
    if let Some(floor) = s.bess_soc_final_min {
        p.add_constraint("bess_terminal", vec![(v(&p, Symbol::SocB, n - 1), 1.0)], Sense::Ge, floor);
    }

    let mut obj = Vec::with_capacity(5 * n + 1);
    for t in 0..n {
        obj.push((v(&p, Symbol::PGrid, t), dt * s.tariff.energy_price[t]));
        for st in &storages {
            let c = st.params.degradation_rate * dt;
            obj.push((v(&p, st.power_in, t), st.params.eta_charge * c));
            obj.push((v(&p, st.power_out, t), c / st.params.eta_discharge));
        }
    }
    if let Some(pk) = peak {
        obj.push((pk, s.tariff.demand_charge));
    }
    p.set_objective(obj, 0.0);
    p
}
