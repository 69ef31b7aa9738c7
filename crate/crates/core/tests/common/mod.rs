#![allow(dead_code)]

use microgrid_core::domain::*;
use microgrid_core::milp::{MilpProblem, Sense, Symbol, VarKey};
use microgrid_core::presets;
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn storage(rng: &mut ChaCha8Rng, cap: (f64, f64), rate: (f64, f64)) -> StorageParams {
    let soc_min = rng.gen_range(0.0..0.4);
    let soc_max = rng.gen_range(0.7..=1.0);
    StorageParams {
        capacity_kwh: rng.gen_range(cap.0..cap.1),
        max_charge_kw: rng.gen_range(rate.0..rate.1),
        max_discharge_kw: rng.gen_range(rate.0..rate.1),
        eta_charge: rng.gen_range(0.85..=1.0),
        eta_discharge: rng.gen_range(0.85..=1.0),
        soc_min,
        soc_max,
        soc_initial: rng.gen_range(soc_min..=soc_max),
        degradation_rate: rng.gen_range(0.0..0.15),
    }
}

/// Small randomized building with every device active. Not guaranteed
/// feasible when export is off.
pub fn random_scenario(seed: u64, n: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = TimeGrid { start_hour: rng.gen_range(6.0..14.0), delta_t: 0.25, n_slots: n };
    let profile = Profile {
        ghi: (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(),
        t_out: (0..n).map(|_| rng.gen_range(24.0..36.0)).collect(),
        energy_price: (0..n).map(|_| rng.gen_range(0.05..0.45)).collect(),
        misc_load: (0..n).map(|_| rng.gen_range(0.0..40.0)).collect(),
    };
    let bess = storage(&mut rng, (10.0, 150.0), (5.0, 50.0));
    let ev = storage(&mut rng, (20.0, 100.0), (3.0, 50.0));
    let from = rng.gen_range(0..=n);
    let to = rng.gen_range(from..=n);
    let pev = PevParams {
        soc_final_min: rng.gen_range(ev.soc_min..=ev.soc_initial),
        storage: ev,
        available_from_slot: from,
        available_to_slot: to,
    };
    let lo = rng.gen_range(20.0..25.0);
    let hvac = HvacParams::fitted(lo, lo + rng.gen_range(0.0..4.0));
    let phi_min = rng.gen_range(0.0..0.12);
    let lighting = LightingParams {
        phi_min,
        phi_max: phi_min + rng.gen_range(0.0..0.06),
        building_area_ft2: presets::BUILDING_AREA_FT2,
        area_fraction: rng.gen_range(0.01..0.2),
        eta_lighting: rng.gen_range(0.8..=1.0),
    };
    let pv = PvParams { area_m2: rng.gen_range(10.0..400.0), ..PvParams::default() };
    let tariff = Tariff { energy_price: profile.energy_price.clone(), demand_charge: rng.gen_range(0.0..5.0) };
    let bess_soc_final_min = rng.gen_bool(0.5).then(|| rng.gen_range(bess.soc_min..=bess.soc_initial));
    Scenario {
        grid,
        profile,
        pv,
        bess,
        pev,
        hvac,
        lighting,
        tariff,
        objective_kind: if rng.gen_bool(0.5) { ObjectiveKind::EnergyPlusDegradation } else { ObjectiveKind::WithDemandCharge },
        allow_export: rng.gen_bool(0.3),
        bess_soc_final_min,
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// LP with the listed binaries pinned, solved by minilp. `None` if infeasible.
pub fn reference_lp(p: &MilpProblem, pins: &[(usize, f64)]) -> Option<f64> {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let mut obj = vec![0.0; p.num_vars()];
    for &(j, c) in &p.objective.coeffs {
        obj[j] += c;
    }
    let mut vars = Vec::with_capacity(p.num_vars());
    for (j, v) in p.variables.iter().enumerate() {
        let (mut lo, mut hi) = (v.lower, v.upper);
        if let Some(&(_, x)) = pins.iter().find(|(k, _)| *k == j) {
            if x < lo || x > hi {
                return None;
            }
            lo = x;
            hi = x;
        }
        vars.push(lp.add_var(obj[j], (lo, hi)));
    }
    for c in &p.constraints {
        let expr: Vec<_> = c.coeffs.iter().map(|&(j, a)| (vars[j], a)).collect();
        let op = match c.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
            Sense::Eq => ComparisonOp::Eq,
        };
        lp.add_constraint(expr.as_slice(), op, c.rhs);
    }
    match lp.solve() {
        Ok(sol) => Some(sol.objective() + p.objective.constant),
        Err(minilp::Error::Infeasible) => None,
        Err(e) => panic!("reference LP failed: {e:?}"),
    }
}

/// Minimum over all 2^(2n) storage mode patterns.
pub fn brute_force(p: &MilpProblem, n: usize) -> Option<f64> {
    let idx = |s, t| p.var(VarKey::at(s, t)).unwrap();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << (2 * n)) {
        let mut pins = Vec::with_capacity(4 * n);
        for t in 0..n {
            let b = f64::from((mask >> (2 * t)) & 1);
            let e = f64::from((mask >> (2 * t + 1)) & 1);
            pins.extend([(idx(Symbol::B1, t), b), (idx(Symbol::D1, t), 1.0 - b)]);
            pins.extend([(idx(Symbol::E1, t), e), (idx(Symbol::E2, t), 1.0 - e)]);
        }
        if let Some(v) = reference_lp(p, &pins) {
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}
