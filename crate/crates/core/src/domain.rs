//! Physical and economic parameters of the building microgrid and the
//! closed-form component models (PV, HVAC, lighting, degradation cost).
//!
//! State of charge is carried as a fraction of capacity everywhere in this
//! crate. Conversion to kWh happens only when reporting.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;

use thiserror::Error;

/// Square feet to square metres.
pub const FT2_TO_M2: f64 = 0.0929;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DomainError {
    #[error("setpoint {setpoint} degC outside comfort band [{min}, {max}]")]
    SetpointOutOfBand { setpoint: f64, min: f64, max: f64 },
    #[error("HVAC model yields negative power {power_kw} kW")]
    NegativeHvacPower { power_kw: f64 },
    #[error("lighting intensity {phi} kW/m2 outside [{min}, {max}]")]
    LightingOutOfBand { phi: f64, min: f64, max: f64 },
    #[error("degradation inputs must be positive (energy {energy_kwh} kWh/day, k {k_dep})")]
    NonPositiveDegradationInput { energy_kwh: f64, k_dep: f64 },
}

/// Uniform time discretisation of the scheduling horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    /// Hour of day at which slot 0 starts.
    pub start_hour: f64,
    /// Slot length in hours.
    pub delta_t: f64,
    pub n_slots: usize,
}

impl TimeGrid {
    /// 9:00 to 21:00 in 15 minute slots.
    pub const fn default_day() -> Self {
        TimeGrid { start_hour: 9.0, delta_t: 0.25, n_slots: 48 }
    }

    /// Hour of day at the start of `slot`.
    pub fn slot_start_hour(&self, slot: usize) -> f64 {
        self.start_hour + slot as f64 * self.delta_t
    }

    pub fn slot_mid_hour(&self, slot: usize) -> f64 {
        self.slot_start_hour(slot) + 0.5 * self.delta_t
    }

    pub fn end_hour(&self) -> f64 {
        self.slot_start_hour(self.n_slots)
    }

    /// Index of the first slot starting at or after `hour`, saturating at `n_slots`.
    pub fn slot_at_hour(&self, hour: f64) -> usize {
        let raw = (hour - self.start_hour) / self.delta_t;
        if raw <= 0.0 {
            0
        } else {
            let slot = libm::ceil(raw - 1e-9) as usize;
            slot.min(self.n_slots)
        }
    }
}

/// Per-slot exogenous inputs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Profile {
    /// Global horizontal irradiance, kW/m2.
    pub ghi: Vec<f64>,
    /// Outdoor temperature, degC.
    pub t_out: Vec<f64>,
    /// Energy price, $/kWh.
    pub energy_price: Vec<f64>,
    /// Uncontrollable plug load, kW.
    pub misc_load: Vec<f64>,
}

impl Profile {
    pub fn len(&self) -> usize {
        self.ghi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ghi.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvParams {
    pub efficiency: f64,
    pub area_m2: f64,
    /// Power temperature coefficient, per degC.
    pub temp_coeff: f64,
    /// Reference temperature of the temperature correction, degC.
    pub ambient_ref_temp: f64,
}

impl PvParams {
    pub fn power(&self, ghi: f64, t_out: f64) -> f64 {
        pv_power(self, ghi, t_out)
    }
}

impl Default for PvParams {
    /// 0.17 efficiency, 0.005/degC, 25 degC reference, array sized for
    /// 180 kW at 1 kW/m2 and reference temperature.
    fn default() -> Self {
        PvParams { efficiency: 0.17, area_m2: 180.0 / 0.17, temp_coeff: 0.005, ambient_ref_temp: 25.0 }
    }
}

/// Battery parameters shared by the stationary BESS and the vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageParams {
    pub capacity_kwh: f64,
    pub max_charge_kw: f64,
    pub max_discharge_kw: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub soc_initial: f64,
    /// Wear cost on throughput, $/kWh.
    pub degradation_rate: f64,
}

impl StorageParams {
    /// Fractional SOC change per kW of charging over one slot.
    pub fn charge_soc_gain(&self, delta_t: f64) -> f64 {
        self.eta_charge * delta_t / self.capacity_kwh
    }

    /// Fractional SOC change per kW of discharging over one slot.
    pub fn discharge_soc_loss(&self, delta_t: f64) -> f64 {
        delta_t / (self.eta_discharge * self.capacity_kwh)
    }

    /// Degradation cost of one slot of operation.
    pub fn throughput_cost(&self, charge_kw: f64, discharge_kw: f64, delta_t: f64) -> f64 {
        (self.eta_charge * charge_kw + discharge_kw / self.eta_discharge) * self.degradation_rate * delta_t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PevParams {
    pub storage: StorageParams,
    /// First slot the vehicle is plugged in.
    pub available_from_slot: usize,
    /// One past the last plugged-in slot.
    pub available_to_slot: usize,
    /// Minimum SOC at the end of the horizon.
    pub soc_final_min: f64,
}

impl PevParams {
    pub fn is_available(&self, slot: usize) -> bool {
        slot >= self.available_from_slot && slot < self.available_to_slot
    }
}

/// Linear HVAC power model fitted against setpoint minus outdoor temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HvacParams {
    /// kW per degC of (setpoint - outdoor).
    pub slope: f64,
    pub intercept: f64,
    pub t_set_min: f64,
    pub t_set_max: f64,
}

impl HvacParams {
    pub const FITTED_SLOPE: f64 = -0.2186;
    pub const FITTED_INTERCEPT: f64 = 5.63;

    pub fn fitted(t_set_min: f64, t_set_max: f64) -> Self {
        HvacParams { slope: Self::FITTED_SLOPE, intercept: Self::FITTED_INTERCEPT, t_set_min, t_set_max }
    }

    /// Model output without the band and sign checks.
    pub fn raw_power(&self, t_setpoint: f64, t_out: f64) -> f64 {
        self.slope * (t_setpoint - t_out) + self.intercept
    }

    /// Smallest power the model can produce inside the band at `t_out`.
    pub fn min_power(&self, t_out: f64) -> f64 {
        let a = self.raw_power(self.t_set_min, t_out);
        let b = self.raw_power(self.t_set_max, t_out);
        a.min(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightingParams {
    /// Lighting power density bounds, kW/m2.
    pub phi_min: f64,
    pub phi_max: f64,
    pub building_area_ft2: f64,
    /// Share of the floor area that is lit (1.0 = whole building).
    pub area_fraction: f64,
    pub eta_lighting: f64,
}

impl LightingParams {
    /// kW of lighting per kW/m2 of intensity.
    pub fn power_per_phi(&self) -> f64 {
        FT2_TO_M2 * self.building_area_ft2 * self.area_fraction / self.eta_lighting
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tariff {
    /// Per-slot energy price, $/kWh.
    pub energy_price: Vec<f64>,
    /// $/kW on the highest grid draw of the horizon.
    pub demand_charge: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectiveKind {
    /// Energy purchases plus storage wear.
    EnergyPlusDegradation,
    /// Energy purchases, storage wear, and the peak demand charge.
    WithDemandCharge,
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveKind::EnergyPlusDegradation => f.write_str("energy"),
            ObjectiveKind::WithDemandCharge => f.write_str("demand"),
        }
    }
}

/// A complete problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: TimeGrid,
    pub profile: Profile,
    pub pv: PvParams,
    pub bess: StorageParams,
    pub pev: PevParams,
    pub hvac: HvacParams,
    pub lighting: LightingParams,
    pub tariff: Tariff,
    pub objective_kind: ObjectiveKind,
    /// Allow negative grid power (export). Off by default: tariffs price purchases only.
    pub allow_export: bool,
    /// Optional end-of-horizon floor on BESS SOC.
    pub bess_soc_final_min: Option<f64>,
}

impl Scenario {
    /// PV output per slot, kW.
    pub fn pv_series(&self) -> Vec<f64> {
        self.profile.ghi.iter().zip(&self.profile.t_out).map(|(&g, &t)| pv_power(&self.pv, g, t)).collect()
    }
}

/// PV array output. Clamped at zero for extreme temperature derating.
pub fn pv_power(pv: &PvParams, ghi: f64, t_out: f64) -> f64 {
    let p = pv.efficiency * pv.area_m2 * ghi * (1.0 - pv.temp_coeff * (t_out - pv.ambient_ref_temp));
    p.max(0.0)
}

pub fn hvac_power(h: &HvacParams, t_setpoint: f64, t_out: f64) -> Result<f64, DomainError> {
    if !(h.t_set_min..=h.t_set_max).contains(&t_setpoint) {
        return Err(DomainError::SetpointOutOfBand { setpoint: t_setpoint, min: h.t_set_min, max: h.t_set_max });
    }
    let p = h.raw_power(t_setpoint, t_out);
    if p < 0.0 {
        return Err(DomainError::NegativeHvacPower { power_kw: p });
    }
    Ok(p)
}

pub fn lighting_power(l: &LightingParams, phi: f64) -> Result<f64, DomainError> {
    if !(l.phi_min..=l.phi_max).contains(&phi) {
        return Err(DomainError::LightingOutOfBand { phi, min: l.phi_min, max: l.phi_max });
    }
    Ok(FT2_TO_M2 * phi * l.building_area_ft2 * l.area_fraction / l.eta_lighting)
}

/// Throughput degradation cost in $/kWh from daily depreciation figures.
pub fn degradation_rate(c_dep_daily: f64, e_dep_daily: f64, k_dep: f64) -> Result<f64, DomainError> {
    if !(e_dep_daily > 0.0 && k_dep > 0.0) {
        return Err(DomainError::NonPositiveDegradationInput { energy_kwh: e_dep_daily, k_dep });
    }
    Ok(c_dep_daily / (e_dep_daily / k_dep))
}

/// One failed scenario check.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationIssue {
    /// Dotted field path, e.g. `bess.soc_initial`.
    pub path: String,
    pub slot: Option<usize>,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.slot {
            Some(s) => write!(f, "{}[{}]: {}", self.path, s, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationErrors(pub Vec<ValidationIssue>);

impl ValidationErrors {
    pub fn issues(&self) -> &[ValidationIssue] {
        &self.0
    }

    pub fn mentions(&self, path: &str) -> bool {
        self.0.iter().any(|i| i.path == path)
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} scenario issue(s)", self.0.len())?;
        for issue in &self.0 {
            write!(f, "; {issue}")?;
        }
        Ok(())
    }
}

/// A scenario that passed [`validate_scenario`]. Only these can be compiled.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidScenario(Scenario);

impl ValidScenario {
    pub fn into_inner(self) -> Scenario {
        self.0
    }
}

impl Deref for ValidScenario {
    type Target = Scenario;
    fn deref(&self) -> &Scenario {
        &self.0
    }
}

struct Checker {
    issues: Vec<ValidationIssue>,
}

impl Checker {
    fn fail(&mut self, path: &str, slot: Option<usize>, message: String) {
        self.issues.push(ValidationIssue { path: path.into(), slot, message });
    }

    fn check(&mut self, ok: bool, path: &str, message: impl FnOnce() -> String) {
        if !ok {
            self.fail(path, None, message());
        }
    }

    fn series(&mut self, path: &str, values: &[f64], n: usize, nonneg: bool) {
        if values.len() != n {
            self.fail(path, None, format!("length {} does not match n_slots {}", values.len(), n));
        }
        for (slot, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                self.fail(path, Some(slot), format!("non-finite value {v}"));
            } else if nonneg && v < 0.0 {
                self.fail(path, Some(slot), format!("negative value {v}"));
            }
        }
    }

    fn fraction(&mut self, path: &str, v: f64, allow_zero: bool) {
        let ok = if allow_zero { (0.0..=1.0).contains(&v) } else { v > 0.0 && v <= 1.0 };
        self.check(ok, path, || format!("{v} is not a valid fraction"));
    }

    fn storage(&mut self, prefix: &str, s: &StorageParams) {
        let p = |f: &str| format!("{prefix}.{f}");
        self.check(s.capacity_kwh > 0.0 && s.capacity_kwh.is_finite(), &p("capacity_kwh"), || {
            format!("capacity {} must be positive", s.capacity_kwh)
        });
        self.check(s.max_charge_kw >= 0.0 && s.max_charge_kw.is_finite(), &p("max_charge_kw"), || {
            format!("rate {} must be non-negative", s.max_charge_kw)
        });
        self.check(s.max_discharge_kw >= 0.0 && s.max_discharge_kw.is_finite(), &p("max_discharge_kw"), || {
            format!("rate {} must be non-negative", s.max_discharge_kw)
        });
        self.fraction(&p("eta_charge"), s.eta_charge, false);
        self.fraction(&p("eta_discharge"), s.eta_discharge, false);
        self.fraction(&p("soc_min"), s.soc_min, true);
        self.fraction(&p("soc_max"), s.soc_max, true);
        self.check(s.soc_min <= s.soc_initial, &p("soc_initial"), || {
            format!("initial SOC {} below soc_min {}", s.soc_initial, s.soc_min)
        });
        self.check(s.soc_initial <= s.soc_max, &p("soc_initial"), || {
            format!("initial SOC {} above soc_max {}", s.soc_initial, s.soc_max)
        });
        self.check(s.degradation_rate >= 0.0 && s.degradation_rate.is_finite(), &p("degradation_rate"), || {
            format!("degradation rate {} must be non-negative", s.degradation_rate)
        });
    }
}

/// Checks every invariant of the scenario and its parts. All failures are
/// collected rather than stopping at the first.
pub fn validate_scenario(s: Scenario) -> Result<ValidScenario, ValidationErrors> {
    let mut c = Checker { issues: Vec::new() };
    let g = &s.grid;
    c.check(g.delta_t > 0.0 && g.delta_t.is_finite(), "grid.delta_t", || format!("slot length {} must be positive", g.delta_t));
    c.check(g.n_slots >= 1, "grid.n_slots", || "horizon needs at least one slot".into());
    c.check(g.start_hour >= 0.0, "grid.start_hour", || format!("start hour {} is negative", g.start_hour));
    c.check(g.end_hour() <= 24.0 + 1e-9, "grid.n_slots", || {
        format!("horizon ends at hour {} past midnight", g.end_hour())
    });

    let n = g.n_slots;
    c.series("profile.ghi", &s.profile.ghi, n, true);
    c.series("profile.t_out", &s.profile.t_out, n, false);
    c.series("profile.energy_price", &s.profile.energy_price, n, true);
    c.series("profile.misc_load", &s.profile.misc_load, n, true);
    c.series("tariff.energy_price", &s.tariff.energy_price, n, true);
    c.check(s.tariff.demand_charge >= 0.0 && s.tariff.demand_charge.is_finite(), "tariff.demand_charge", || {
        format!("demand charge {} must be non-negative", s.tariff.demand_charge)
    });

    let pv = &s.pv;
    c.fraction("pv.efficiency", pv.efficiency, false);
    c.check(pv.area_m2 > 0.0 && pv.area_m2.is_finite(), "pv.area_m2", || format!("area {} must be positive", pv.area_m2));
    c.check(pv.temp_coeff >= 0.0, "pv.temp_coeff", || format!("coefficient {} must be non-negative", pv.temp_coeff));
    c.check(pv.ambient_ref_temp.is_finite(), "pv.ambient_ref_temp", || "reference temperature must be finite".into());

    c.storage("bess", &s.bess);
    c.storage("pev.storage", &s.pev.storage);
    let pev = &s.pev;
    c.check(pev.available_from_slot <= pev.available_to_slot, "pev.available_from_slot", || {
        format!("window start {} after end {}", pev.available_from_slot, pev.available_to_slot)
    });
    c.check(pev.available_to_slot <= n, "pev.available_to_slot", || {
        format!("window end {} beyond n_slots {}", pev.available_to_slot, n)
    });
    c.check(
        pev.storage.soc_min <= pev.soc_final_min && pev.soc_final_min <= pev.storage.soc_max,
        "pev.soc_final_min",
        || format!("final SOC floor {} outside [{}, {}]", pev.soc_final_min, pev.storage.soc_min, pev.storage.soc_max),
    );
    if let Some(f) = s.bess_soc_final_min {
        c.check(s.bess.soc_min <= f && f <= s.bess.soc_max, "bess_soc_final_min", || {
            format!("final SOC floor {f} outside [{}, {}]", s.bess.soc_min, s.bess.soc_max)
        });
    }

    let h = &s.hvac;
    c.check(h.t_set_min <= h.t_set_max, "hvac.t_set_min", || {
        format!("setpoint band [{}, {}] is empty", h.t_set_min, h.t_set_max)
    });
    c.check(h.slope < 0.0, "hvac.slope", || format!("slope {} must be negative", h.slope));
    if h.t_set_min <= h.t_set_max {
        for (slot, &t) in s.profile.t_out.iter().enumerate() {
            let p = h.min_power(t);
            if p < 0.0 {
                c.fail("hvac", Some(slot), format!("model goes negative ({p:.3} kW) at outdoor {t} degC"));
            }
        }
    }

    let l = &s.lighting;
    c.check(0.0 <= l.phi_min && l.phi_min <= l.phi_max, "lighting.phi_min", || {
        format!("intensity band [{}, {}] invalid", l.phi_min, l.phi_max)
    });
    c.check(l.building_area_ft2 > 0.0, "lighting.building_area_ft2", || format!("area {} must be positive", l.building_area_ft2));
    c.fraction("lighting.area_fraction", l.area_fraction, false);
    c.fraction("lighting.eta_lighting", l.eta_lighting, false);

    if c.issues.is_empty() {
        Ok(ValidScenario(s))
    } else {
        Err(ValidationErrors(c.issues))
    }
}
