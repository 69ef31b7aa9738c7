//! Bundled branch and bound against exhaustive enumeration of the mode
//! binaries, each pattern solved by an independent LP engine.

mod common;

use common::{brute_force, random_scenario, rel_close};
use microgrid_core::domain::validate_scenario;
use microgrid_core::milp::{compile, extract_schedule, SolveStatus};
use microgrid_core::solver::{check_feasibility, solve_milp, SolverOptions};

#[test]
fn milp_matches_enumeration_and_solutions_are_physical() {
    let opts = SolverOptions::default();
    let (mut checked, mut feasible, mut seed) = (0, 0, 0u64);
    while checked < 200 {
        seed += 1;
        let n = 1 + (seed as usize % 4);
        let Ok(s) = validate_scenario(random_scenario(seed, n)) else { continue };
        checked += 1;
        let p = compile(&s);
        let sol = solve_milp(&p, &opts);
        let oracle = brute_force(&p, n);
        match oracle {
            None => assert_eq!(sol.status, SolveStatus::Infeasible, "seed {seed}"),
            Some(best) => {
                feasible += 1;
                assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}");
                assert!(rel_close(sol.objective_value, best, 1e-6), "seed {seed}: {} vs {best}", sol.objective_value);

                let report = check_feasibility(&p, &sol.values, 1e-6);
                assert!(report.is_feasible(), "seed {seed}: {:?}", report.violations);
                let sched = extract_schedule(&p, &sol, &s).unwrap();
                let issues = sched.invariant_violations(&s, 1e-6, 1e-9);
                assert!(issues.is_empty(), "seed {seed}: {issues:?}");
            }
        }
    }
    assert!(feasible >= 100, "only {feasible} feasible instances");
}

#[test]
fn two_slot_toy_against_enumeration() {
    // fixed 5 kW load, one storage, price steps up in the second slot
    let mut s = microgrid_core::presets::base_case();
    s.grid.n_slots = 2;
    s.profile.ghi = vec![0.0; 2];
    s.profile.t_out = vec![25.0; 2];
    s.profile.misc_load = vec![5.0; 2];
    s.profile.energy_price = vec![0.10, 0.60];
    s.tariff.energy_price = s.profile.energy_price.clone();
    s.hvac = microgrid_core::domain::HvacParams { slope: -0.2186, intercept: 0.0, t_set_min: 25.0, t_set_max: 25.0 };
    s.lighting.phi_min = 0.0;
    s.lighting.phi_max = 0.0;
    s.pev.available_from_slot = 0;
    s.pev.available_to_slot = 0;
    s.pev.soc_final_min = s.pev.storage.soc_initial;
    s.bess_soc_final_min = None;
    let s = validate_scenario(s).unwrap();
    let p = compile(&s);
    let sol = solve_milp(&p, &SolverOptions::default());
    let best = brute_force(&p, 2).unwrap();
    assert!(rel_close(sol.objective_value, best, 1e-9), "{} vs {best}", sol.objective_value);
    let sched = extract_schedule(&p, &sol, &s).unwrap();
    // on-peak load is met from the battery
    assert!(sched.p_dis_b[1] > 0.0 && sched.p_grid[1] == 0.0);
}
