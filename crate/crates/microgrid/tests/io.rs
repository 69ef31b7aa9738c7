#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};

use microgrid::artifacts::{read_schedule, schedule_csv};
use microgrid::config::Config;
use microgrid::profile::load_profile;
use microgrid_core::domain::{validate_scenario, TimeGrid};
use microgrid_core::milp::{compile, export_lp, parse_lp, VarKind};
use microgrid_core::presets::{self, synthetic_day, Weather};
use microgrid_core::solver::{solve_lp, solve_milp, SolverOptions};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[test]
fn weather_fixtures_match_synthetic_days() {
    let grid = TimeGrid::default_day();
    assert_eq!(load_profile(&fixture("sunny.csv")).unwrap(), synthetic_day(&grid, Weather::Sunny));
    assert_eq!(load_profile(&fixture("cloudy.csv")).unwrap(), synthetic_day(&grid, Weather::Cloudy));
}

#[test]
fn base_case_toml_is_the_base_case() {
    let s = Config::load(&fixture("base_case.toml")).unwrap().scenario().unwrap();
    assert_eq!(s, presets::base_case());
}

#[test]
fn exported_lp_agrees_with_an_independent_lp_engine() {
    let s = validate_scenario(presets::base_case()).unwrap();
    let p = compile(&s);
    let sol = solve_milp(&p, &SolverOptions::default());
    let parsed = parse_lp(&export_lp(&p)).unwrap();

    let pins: Vec<(usize, f64)> =
        parsed.variables.iter().enumerate().filter(|(_, v)| v.kind == VarKind::Binary).map(|(j, _)| (j, sol.values[j].round())).collect();
    let pinned = common::reference_lp(&parsed, &pins).unwrap();
    assert!(common::rel_close(pinned, sol.objective_value, 1e-4), "{pinned} vs {}", sol.objective_value);

    let relaxed = common::reference_lp(&parsed, &[]).unwrap();
    let bundled_relaxed = solve_lp(&p, &SolverOptions::default()).objective;
    assert!(common::rel_close(relaxed, bundled_relaxed, 1e-6), "{relaxed} vs {bundled_relaxed}");
    assert!(relaxed <= sol.objective_value + 1e-6);
}

#[test]
fn random_problems_round_trip_through_lp_text() {
    for seed in 0..20 {
        let Ok(s) = validate_scenario(common::random_scenario(seed, 1 + seed as usize % 6)) else { continue };
        let p = compile(&s);
        let text = export_lp(&p);
        let back = parse_lp(&text).unwrap();
        assert_eq!(back.variables, p.variables, "seed {seed}");
        assert_eq!(back.constraints, p.constraints, "seed {seed}");
        assert_eq!(export_lp(&back), text, "seed {seed}");
    }
}

#[test]
fn optimized_schedule_survives_csv() {
    let s = validate_scenario(presets::base_case()).unwrap();
    let p = compile(&s);
    let sched = microgrid_core::milp::extract_schedule(&p, &solve_milp(&p, &SolverOptions::default()), &s).unwrap();
    let bytes = schedule_csv(&sched, 9.0);
    let back = read_schedule(bytes.as_slice(), Path::new("schedule.csv")).unwrap();
    for (a, b) in [(&back.p_grid, &sched.p_grid), (&back.p_ch_b, &sched.p_ch_b), (&back.soc_b, &sched.soc_b), (&back.t_set, &sched.t_set)] {
        assert_eq!(a, b);
    }
    assert_eq!(back.b1, sched.b1);
    assert_eq!(back.throughput_kwh(), sched.throughput_kwh());
}

#[test]
fn faster_charger_softens_the_lighting_peak_increase() {
    use microgrid::engine::{AxisKind, SweepSpec};
    let increase = |level: u8| {
        let mut cfg = Config::default();
        cfg.pev.level = Some(level);
        let spec = SweepSpec::parse(AxisKind::Lighting, "0.4,0.6").unwrap();
        let rep = microgrid::run_sweep(&cfg.scenario().unwrap(), &spec, &SolverOptions::default());
        let peaks: Vec<f64> = rep
            .rows
            .iter()
            .map(|r| microgrid_core::schedule::peak_demand(&r.outcome.as_ref().unwrap().schedule.p_grid).unwrap().0)
            .collect();
        peaks[1] / peaks[0] - 1.0
    };
    let (two, three) = (increase(2), increase(3));
    assert!(two > three, "Level II +{two:.3}, Level III +{three:.3}");
}
