//! Solve pipeline and sensitivity sweeps.

use std::fmt;
use std::str::FromStr;

use microgrid_core::domain::{validate_scenario, HvacParams, Scenario};
use microgrid_core::milp::{compile, extract_schedule, MilpProblem, Schedule, Solution};
use microgrid_core::presets::{self, ChargerLevel, TariffPreset, Weather};
use microgrid_core::schedule::{cost_breakdown, heuristic_baseline, savings};
use microgrid_core::solver::{solve_milp, SolverOptions};

use crate::config::charger_level;
use crate::error::{Error, Result};

/// One optimized scenario with its heuristic reference.
#[derive(Debug, Clone)]
pub struct Solved {
    pub scenario: Scenario,
    pub problem: MilpProblem,
    pub solution: Solution,
    pub schedule: Schedule,
    pub baseline: Schedule,
}

impl Solved {
    /// Percent saved against the baseline; `None` when the baseline costs nothing.
    pub fn savings_pct(&self) -> Option<f64> {
        savings(self.schedule.costs.total_usd, self.baseline.costs.total_usd).ok()
    }
}

pub fn solve_scenario(s: Scenario, opts: &SolverOptions) -> Result<Solved> {
    let valid = validate_scenario(s)?;
    let problem = compile(&valid);
    let solution = solve_milp(&problem, opts);
    if !solution.is_optimal() {
        return Err(Error::Solve(solution.status));
    }
    let schedule = extract_schedule(&problem, &solution, &valid)?;
    let baseline = heuristic_baseline(&valid)?;
    Ok(Solved { scenario: valid.into_inner(), problem, solution, schedule, baseline })
}

/// Savings percentage as printed in tables: one decimal.
pub fn format_savings(pct: f64) -> String {
    format!("{pct:.1}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum AxisKind {
    Lighting,
    TemperatureBand,
    Tariff,
    Weather,
    PevLevel,
}

impl AxisKind {
    pub fn name(self) -> &'static str {
        match self {
            AxisKind::Lighting => "lighting",
            AxisKind::TemperatureBand => "temperature_band",
            AxisKind::Tariff => "tariff",
            AxisKind::Weather => "weather",
            AxisKind::PevLevel => "pev_level",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisValue {
    /// Lit share of the floor area.
    Lighting(f64),
    /// Setpoint band `center +/- half_width`, degC.
    TemperatureBand { center: f64, half_width: f64 },
    Tariff(TariffPreset),
    Weather(Weather),
    PevLevel(ChargerLevel),
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Lighting(x) => write!(f, "{x}"),
            AxisValue::TemperatureBand { center, half_width } => write!(f, "{center}:{half_width}"),
            AxisValue::Tariff(t) => f.write_str(t.name()),
            AxisValue::Weather(w) => f.write_str(w.name()),
            AxisValue::PevLevel(l) => write!(f, "{}", l.number()),
        }
    }
}

impl AxisValue {
    pub fn parse(kind: AxisKind, s: &str) -> Result<Self> {
        let bad = || Error::input("sweep", format!("bad {} value `{s}`", kind.name()));
        let s = s.trim();
        let v = match kind {
            AxisKind::Lighting => AxisValue::Lighting(s.parse().map_err(|_| bad())?),
            AxisKind::TemperatureBand => {
                let (c, w) = s.split_once(':').ok_or_else(bad)?;
                AxisValue::TemperatureBand {
                    center: c.parse().map_err(|_| bad())?,
                    half_width: w.parse().map_err(|_| bad())?,
                }
            }
            AxisKind::Tariff => AxisValue::Tariff(TariffPreset::from_str(s).map_err(|_| bad())?),
            AxisKind::Weather => AxisValue::Weather(Weather::from_str(s).map_err(|_| bad())?),
            AxisKind::PevLevel => AxisValue::PevLevel(s.parse().ok().and_then(charger_level).ok_or_else(bad)?),
        };
        Ok(v)
    }

    /// `base` with this value substituted.
    pub fn apply(&self, base: &Scenario) -> Scenario {
        let mut s = base.clone();
        match *self {
            AxisValue::Lighting(frac) => s.lighting.area_fraction = frac,
            AxisValue::TemperatureBand { center, half_width } => {
                s.hvac = HvacParams { t_set_min: center - half_width, t_set_max: center + half_width, ..s.hvac };
            }
            AxisValue::Tariff(t) => {
                s.tariff.energy_price = t.prices(&s.grid);
                s.profile.energy_price = s.tariff.energy_price.clone();
            }
            AxisValue::Weather(w) => {
                let day = presets::synthetic_day(&s.grid, w);
                s.profile.ghi = day.ghi;
                s.profile.t_out = day.t_out;
            }
            AxisValue::PevLevel(level) => {
                let mut pev = level.pev(&s.grid);
                pev.available_from_slot = s.pev.available_from_slot;
                pev.available_to_slot = s.pev.available_to_slot;
                s.pev = pev;
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: AxisKind,
    pub values: Vec<AxisValue>,
}

impl SweepSpec {
    /// Comma-separated values for `axis`.
    pub fn parse(axis: AxisKind, values: &str) -> Result<Self> {
        let values = values.split(',').filter(|v| !v.trim().is_empty()).map(|v| AxisValue::parse(axis, v)).collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(Error::input("sweep", "no sweep values given"));
        }
        Ok(SweepSpec { axis, values })
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: AxisValue,
    pub outcome: std::result::Result<Solved, String>,
    /// Independent recomputation of the optimized total.
    pub recomputed_total: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub axis: AxisKind,
    pub rows: Vec<SweepRow>,
    pub findings: Vec<Finding>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub claim: String,
    pub holds: bool,
    pub detail: String,
}

/// One solve per value; a failing member is recorded and the sweep continues.
pub fn run_sweep(base: &Scenario, spec: &SweepSpec, opts: &SolverOptions) -> SweepReport {
    let rows = std::thread::scope(|scope| {
        let handles: Vec<_> = spec
            .values
            .iter()
            .map(|v| {
                let s = v.apply(base);
                scope.spawn(move || solve_scenario(s, opts))
            })
            .collect();
        handles
            .into_iter()
            .zip(&spec.values)
            .map(|(h, &value)| {
                let outcome = h.join().expect("sweep member panicked").map_err(|e| e.to_string());
                let recomputed_total =
                    outcome.as_ref().ok().and_then(|r| cost_breakdown(&r.schedule, &r.scenario).ok()).map(|c| c.total_usd);
                SweepRow { value, outcome, recomputed_total }
            })
            .collect::<Vec<_>>()
    });
    let findings = findings(spec.axis, &rows);
    SweepReport { axis: spec.axis, rows, findings }
}

const THROUGHPUT_TOL_KWH: f64 = 1e-6;

fn findings(axis: AxisKind, rows: &[SweepRow]) -> Vec<Finding> {
    let solved: Vec<(&AxisValue, &Solved)> = rows.iter().filter_map(|r| r.outcome.as_ref().ok().map(|s| (&r.value, s))).collect();
    let mut out = Vec::new();
    match axis {
        AxisKind::Lighting => {
            let mut pts: Vec<(f64, f64)> = solved
                .iter()
                .filter_map(|(v, s)| match v {
                    AxisValue::Lighting(x) => Some((*x, s.schedule.costs.total_usd)),
                    _ => None,
                })
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let holds = pts.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-6 * w[0].1.abs().max(1.0));
            let detail = pts.iter().map(|(x, c)| format!("{x}: {c:.2}")).collect::<Vec<_>>().join(", ");
            out.push(Finding { claim: "total cost nondecreasing in lighting level".into(), holds, detail });
        }
        AxisKind::TemperatureBand => {
            let mut pts: Vec<(f64, f64)> = solved
                .iter()
                .filter_map(|(v, s)| match v {
                    AxisValue::TemperatureBand { half_width, .. } => Some((*half_width, s.schedule.costs.total_usd)),
                    _ => None,
                })
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let holds = pts.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-6 * w[0].1.abs().max(1.0));
            let detail = pts.iter().map(|(w, c)| format!("+/-{w}: {c:.2}")).collect::<Vec<_>>().join(", ");
            out.push(Finding { claim: "total cost nonincreasing as the comfort band widens".into(), holds, detail });
        }
        AxisKind::Tariff => {
            for (v, s) in &solved {
                let (bess, pev) = s.schedule.throughput_kwh();
                match v {
                    AxisValue::Tariff(TariffPreset::MuniTou) => {
                        let d = s.scenario.bess.degradation_rate.min(s.scenario.pev.storage.degradation_rate);
                        let prices = &s.scenario.tariff.energy_price;
                        let spread = prices.iter().cloned().fold(f64::MIN, f64::max) - prices.iter().cloned().fold(f64::MAX, f64::min);
                        out.push(Finding {
                            claim: "muni-tou: no storage throughput when wear exceeds every price spread".into(),
                            holds: d <= spread || (bess < THROUGHPUT_TOL_KWH && pev < THROUGHPUT_TOL_KWH),
                            detail: format!("spread {spread:.4} $/kWh, wear {d:.4} $/kWh, throughput bess {bess:.3} kWh, pev {pev:.3} kWh"),
                        });
                    }
                    AxisValue::Tariff(TariffPreset::MuniFlat) => {
                        let pv = &s.schedule.pv;
                        let load = microgrid_core::schedule::building_load(&s.schedule, &s.scenario);
                        let off_surplus = (0..s.schedule.len()).filter(|&t| s.schedule.p_ch_b[t] > 1e-6 && pv[t] <= load[t] + 1e-6).count();
                        out.push(Finding {
                            claim: "muni-flat: storage moves energy only for solar or peak smoothing".into(),
                            holds: off_surplus == 0 || s.scenario.objective_kind == microgrid_core::domain::ObjectiveKind::WithDemandCharge,
                            detail: format!("throughput bess {bess:.3} kWh, pev {pev:.3} kWh; {off_surplus} BESS charging slots without PV surplus"),
                        });
                    }
                    _ => {}
                }
            }
        }
        AxisKind::Weather => {
            let get = |w| solved.iter().find(|(v, _)| **v == AxisValue::Weather(w)).and_then(|(_, s)| s.savings_pct());
            if let (Some(sunny), Some(cloudy)) = (get(Weather::Sunny), get(Weather::Cloudy)) {
                out.push(Finding {
                    claim: "cloudy-day savings below sunny-day savings".into(),
                    holds: cloudy < sunny,
                    detail: format!("sunny {}%, cloudy {}%", format_savings(sunny), format_savings(cloudy)),
                });
            }
        }
        AxisKind::PevLevel => {
            let get = |l| solved.iter().find(|(v, _)| **v == AxisValue::PevLevel(l)).map(|(_, s)| s.schedule.costs.total_usd);
            if let (Some(two), Some(three)) = (get(ChargerLevel::LevelII), get(ChargerLevel::LevelIII)) {
                out.push(Finding {
                    claim: "Level III optimized cost at most Level II".into(),
                    holds: three <= two + 1e-6 * two.abs().max(1.0),
                    detail: format!("Level II {two:.2}, Level III {three:.2}"),
                });
            }
        }
    }
    out
}
