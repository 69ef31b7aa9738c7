mod common;

use common::random_scenario;
use microgrid_core::domain::{validate_scenario, ObjectiveKind, Scenario};
use microgrid_core::milp::{compile, SolveStatus};
use microgrid_core::solver::{solve_lp, solve_milp, SolverOptions};
use proptest::prelude::*;

fn optimum(s: &Scenario) -> Option<f64> {
    let v = validate_scenario(s.clone()).ok()?;
    let sol = solve_milp(&compile(&v), &SolverOptions::default());
    (sol.status == SolveStatus::Optimal).then_some(sol.objective_value)
}

/// Slack for two independently gap-terminated solves.
fn slack(a: f64, b: f64) -> f64 {
    2e-6 * a.abs().max(b.abs()).max(1.0)
}

fn feasible(seed: u64, n: usize, export: bool) -> Option<(Scenario, f64)> {
    let mut s = random_scenario(seed, n);
    s.allow_export = export;
    optimum(&s).map(|v| (s, v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn relaxation_bounds_milp(seed in any::<u64>(), n in 4usize..=12) {
        let s = random_scenario(seed, n);
        let Ok(v) = validate_scenario(s) else { return Ok(()) };
        let p = compile(&v);
        let lp = solve_lp(&p, &SolverOptions::default());
        let ip = solve_milp(&p, &SolverOptions::default());
        if ip.status == SolveStatus::Optimal {
            prop_assert_eq!(lp.status, SolveStatus::Optimal);
            prop_assert!(lp.objective <= ip.objective_value + slack(lp.objective, ip.objective_value));
        }
    }

    #[test]
    fn demand_charge_never_lowers_cost(seed in any::<u64>(), n in 4usize..=12) {
        let Some((mut s, _)) = feasible(seed, n, true) else { return Ok(()) };
        s.objective_kind = ObjectiveKind::EnergyPlusDegradation;
        let energy = optimum(&s).unwrap();
        s.objective_kind = ObjectiveKind::WithDemandCharge;
        let demand = optimum(&s).unwrap();
        prop_assert!(demand >= energy - slack(demand, energy), "{} < {}", demand, energy);
    }

    #[test]
    fn cost_nondecreasing_in_phi_min(seed in any::<u64>(), n in 4usize..=12, step in 0.0f64..=1.0) {
        let Some((mut s, before)) = feasible(seed, n, true) else { return Ok(()) };
        s.lighting.phi_min += step * (s.lighting.phi_max - s.lighting.phi_min);
        let after = optimum(&s).unwrap();
        prop_assert!(after >= before - slack(after, before), "{} < {}", after, before);
    }

    #[test]
    fn wider_band_never_costs_more(seed in any::<u64>(), n in 4usize..=12, down in 0.0f64..2.0, up in 0.0f64..2.0) {
        let Some((mut s, before)) = feasible(seed, n, true) else { return Ok(()) };
        s.hvac.t_set_min -= down;
        s.hvac.t_set_max += up;
        let Some(after) = optimum(&s) else { return Ok(()) };
        prop_assert!(after <= before + slack(after, before), "{} > {}", after, before);
    }

    #[test]
    fn price_scale_up_never_lowers_cost(seed in any::<u64>(), n in 4usize..=12, lambda in 1.0f64..3.0) {
        let mut s = random_scenario(seed, n);
        s.allow_export = false;
        s.objective_kind = ObjectiveKind::EnergyPlusDegradation;
        let Some(before) = optimum(&s) else { return Ok(()) };
        for p in s.tariff.energy_price.iter_mut().chain(s.profile.energy_price.iter_mut()) {
            *p *= lambda;
        }
        let after = optimum(&s).unwrap();
        prop_assert!(after >= before - slack(after, before), "{} < {}", after, before);
    }
}

#[test]
fn property_fixtures_are_mostly_feasible() {
    let with_export = (0..40).filter(|&seed| feasible(seed, 8, true).is_some()).count();
    let without = (0..40).filter(|&seed| feasible(seed, 8, false).is_some()).count();
    assert!(with_export >= 30, "{with_export}/40");
    assert!(without >= 20, "{without}/40");
}
