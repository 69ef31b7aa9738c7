//! Cost accounting for dispatch schedules, the uncontrolled heuristic
//! baseline, savings percentages and peak demand statistics.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::domain::{ObjectiveKind, Scenario};
use crate::milp::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum CostError {
    #[error("series `{series}` has {got} slots, scenario has {expected}")]
    LengthMismatch { series: &'static str, expected: usize, got: usize },
    #[error("baseline cost {0} must be positive")]
    NonPositiveBaseline(f64),
}

/// Horizon cost split by term, $.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub energy_usd: f64,
    pub demand_usd: f64,
    pub bess_degradation_usd: f64,
    pub pev_degradation_usd: f64,
    pub total_usd: f64,
}

/// Recomputes every objective term from the dispatch. The demand term is
/// zero unless the scenario's objective includes it.
pub fn cost_breakdown(sched: &Schedule, s: &Scenario) -> Result<CostBreakdown, CostError> {
    let n = s.grid.n_slots;
    let series: [(&'static str, usize); 6] = [
        ("p_grid", sched.p_grid.len()),
        ("p_ch_b", sched.p_ch_b.len()),
        ("p_dis_b", sched.p_dis_b.len()),
        ("p_g2v", sched.p_g2v.len()),
        ("p_v2g", sched.p_v2g.len()),
        ("tariff.energy_price", s.tariff.energy_price.len()),
    ];
    if let Some(&(name, got)) = series.iter().find(|&&(_, len)| len != n) {
        return Err(CostError::LengthMismatch { series: name, expected: n, got });
    }
    let dt = s.grid.delta_t;
    let mut c = CostBreakdown::default();
    for t in 0..n {
        c.energy_usd += sched.p_grid[t] * dt * s.tariff.energy_price[t];
        c.bess_degradation_usd += s.bess.throughput_cost(sched.p_ch_b[t], sched.p_dis_b[t], dt);
        c.pev_degradation_usd += s.pev.storage.throughput_cost(sched.p_g2v[t], sched.p_v2g[t], dt);
    }
    if s.objective_kind == ObjectiveKind::WithDemandCharge {
        let peak = peak_demand(&sched.p_grid).map_or(0.0, |(kw, _)| kw.max(0.0));
        c.demand_usd = s.tariff.demand_charge * peak;
    }
    c.total_usd = c.energy_usd + c.demand_usd + c.bess_degradation_usd + c.pev_degradation_usd;
    Ok(c)
}

/// Percentage saved by `optimized_total` relative to `baseline_total`.
pub fn savings(optimized_total: f64, baseline_total: f64) -> Result<f64, CostError> {
    if !(baseline_total > 0.0) {
        return Err(CostError::NonPositiveBaseline(baseline_total));
    }
    Ok(100.0 * (baseline_total - optimized_total) / baseline_total)
}

/// Highest grid draw and the first slot where it occurs.
pub fn peak_demand(p_grid: &[f64]) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (t, &p) in p_grid.iter().enumerate() {
        match best {
            Some((b, _)) if p <= b => {}
            _ => best = Some((p, t)),
        }
    }
    best
}

/// Uncontrolled reference dispatch. The vehicle charges at full rate from
/// plug-in until full and never discharges, the BESS stays idle at its
/// initial SOC, the setpoint sits mid-band and lighting runs at maximum
/// intensity. The grid closes the balance; PV beyond the load is curtailed
/// and recorded in `pv_curtailed`.
pub fn heuristic_baseline(s: &Scenario) -> Result<Schedule, CostError> {
    let n = s.grid.n_slots;
    let dt = s.grid.delta_t;
    let ev = &s.pev.storage;
    let t_mid = 0.5 * (s.hvac.t_set_min + s.hvac.t_set_max);
    let p_light = s.lighting.power_per_phi() * s.lighting.phi_max;
    let pv = s.pv_series();

    let mut sched = Schedule {
        delta_t: dt,
        p_ch_b: vec![0.0; n],
        p_dis_b: vec![0.0; n],
        p_v2g: vec![0.0; n],
        soc_b: vec![s.bess.soc_initial; n],
        t_set: vec![t_mid; n],
        phi: vec![s.lighting.phi_max; n],
        p_light: vec![p_light; n],
        b1: vec![true; n],
        d1: vec![false; n],
        e1: vec![true; n],
        e2: vec![false; n],
        ..Default::default()
    };
    let mut soc = ev.soc_initial;
    let gain = ev.charge_soc_gain(dt);
    for t in 0..n {
        let charge = if s.pev.is_available(t) && soc < ev.soc_max && gain > 0.0 {
            ev.max_charge_kw.min((ev.soc_max - soc) / gain)
        } else {
            0.0
        };
        soc = (soc + gain * charge).min(ev.soc_max);
        sched.p_g2v.push(charge);
        sched.soc_ev.push(soc);

        let hvac = s.hvac.raw_power(t_mid, s.profile.t_out[t]);
        sched.p_hvac.push(hvac);
        let load = charge + hvac + p_light + s.profile.misc_load[t];
        sched.p_grid.push((load - pv[t]).max(0.0));
        sched.pv_curtailed.push((pv[t] - load).max(0.0));
    }
    sched.pv = pv;
    sched.peak_grid_kw = peak_demand(&sched.p_grid).map_or(0.0, |(kw, _)| kw);
    sched.costs = cost_breakdown(&sched, s)?;
    Ok(sched)
}

/// Total PV curtailed by a schedule, kWh.
pub fn curtailed_energy_kwh(sched: &Schedule) -> f64 {
    sched.pv_curtailed.iter().sum::<f64>() * sched.delta_t
}

/// Convenience for reports: per-slot net building load (kW) seen by the feeder.
pub fn building_load(sched: &Schedule, s: &Scenario) -> Vec<f64> {
    (0..sched.len()).map(|t| sched.p_hvac[t] + sched.p_light[t] + s.profile.misc_load[t]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TimeGrid;
    use crate::presets;

    fn one_slot(dt: f64) -> Scenario {
        let mut s = presets::base_case();
        s.grid = TimeGrid { start_hour: 9.0, delta_t: dt, n_slots: 1 };
        s.tariff.energy_price = vec![0.22];
        s.profile.misc_load.truncate(1);
        s
    }

    fn sched_of(n: usize) -> Schedule {
        Schedule {
            p_grid: vec![0.0; n],
            p_ch_b: vec![0.0; n],
            p_dis_b: vec![0.0; n],
            p_g2v: vec![0.0; n],
            p_v2g: vec![0.0; n],
            ..Default::default()
        }
    }

    #[test]
    fn energy_term() {
        let s = one_slot(0.25);
        let mut sch = sched_of(1);
        sch.p_grid[0] = 10.0;
        let c = cost_breakdown(&sch, &s).unwrap();
        assert!((c.energy_usd - 0.55).abs() < 1e-12);
        assert_eq!(c.demand_usd, 0.0);
    }

    #[test]
    fn bess_charge_term() {
        let s = one_slot(0.25);
        let mut sch = sched_of(1);
        sch.p_ch_b[0] = 10.0;
        let c = cost_breakdown(&sch, &s).unwrap();
        assert!((c.bess_degradation_usd - 0.2375).abs() < 1e-12);
        assert!((c.total_usd - 0.2375).abs() < 1e-12);
    }

    #[test]
    fn demand_term() {
        let mut s = one_slot(0.25);
        s.objective_kind = ObjectiveKind::WithDemandCharge;
        let mut sch = sched_of(1);
        sch.p_grid[0] = 100.0;
        let c = cost_breakdown(&sch, &s).unwrap();
        assert!((c.demand_usd - 383.0).abs() < 1e-9);
    }

    #[test]
    fn length_mismatch() {
        let s = one_slot(0.25);
        let sch = sched_of(2);
        assert!(matches!(cost_breakdown(&sch, &s), Err(CostError::LengthMismatch { .. })));
    }

    #[test]
    fn savings_table_rows() {
        assert!((savings(217.27, 273.34).unwrap() - 20.513).abs() < 1e-3);
        assert!((savings(210.49, 273.34).unwrap() - 22.993).abs() < 1e-3);
        assert!((savings(401.112, 457.18).unwrap() - 12.264).abs() < 1e-3);
        assert_eq!(savings(5.0, 5.0).unwrap(), 0.0);
        assert!(savings(1.0, 0.0).is_err());
    }

    #[test]
    fn peak_first_occurrence() {
        assert_eq!(peak_demand(&[10.0; 4]), Some((10.0, 0)));
        assert_eq!(peak_demand(&[5.0, 12.0, 12.0, 3.0]), Some((12.0, 1)));
        assert_eq!(peak_demand(&[]), None);
    }

    #[test]
    fn baseline_idle_when_nothing_to_do() {
        let mut s = one_slot(0.25);
        s.profile.ghi = vec![0.0];
        s.profile.t_out = vec![25.0];
        s.profile.misc_load = vec![0.0];
        s.pev.storage.soc_initial = 1.0;
        s.pev.soc_final_min = 1.0;
        s.lighting.phi_min = 0.0;
        s.lighting.phi_max = 0.0;
        s.hvac = crate::domain::HvacParams { slope: -1.0, intercept: 0.0, t_set_min: 25.0, t_set_max: 25.0 };
        let b = heuristic_baseline(&s).unwrap();
        assert_eq!(b.p_grid, vec![0.0]);
        assert_eq!(b.costs.total_usd, 0.0);
    }

    #[test]
    fn baseline_without_window_has_no_vehicle_flow() {
        let mut s = presets::base_case();
        s.pev.available_from_slot = 10;
        s.pev.available_to_slot = 10;
        let b = heuristic_baseline(&s).unwrap();
        assert_eq!(b.throughput_kwh().1, 0.0);
        assert!(b.invariant_violations(&s, 1e-9, 1e-12).is_empty());
    }

    #[test]
    fn baseline_charges_until_full() {
        let s = presets::base_case();
        let b = heuristic_baseline(&s).unwrap();
        assert_eq!(b.p_g2v[0], 7.0);
        assert_eq!(*b.soc_ev.last().unwrap(), 1.0);
        // 32 kWh of room at 0.95 * 7 * 0.25 kWh per slot: 19 full slots then a partial one
        assert_eq!(b.p_g2v.iter().filter(|&&p| p == 7.0).count(), 19);
        assert!(b.invariant_violations(&s, 1e-9, 1e-12).is_empty());
    }
}
