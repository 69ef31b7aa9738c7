//! TOML scenario files. Every key is optional and defaults to the base case;
//! see `docs/config.md` for the schema.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use microgrid_core::domain::{
    HvacParams, LightingParams, ObjectiveKind, Profile, PvParams, Scenario, StorageParams, Tariff, TimeGrid,
};
use microgrid_core::feeder::{Attachment, InjectionMap, PhaseSet};
use microgrid_core::presets::{self, ChargerLevel, TariffPreset, Weather};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::profile::load_profile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Energy,
    Demand,
}

impl From<Objective> for ObjectiveKind {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Energy => ObjectiveKind::EnergyPlusDegradation,
            Objective::Demand => ObjectiveKind::WithDemandCharge,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Profile CSV, relative to the config file. Without it the bundled
    /// synthetic sunny day is used.
    pub profile: Option<PathBuf>,
    pub objective: Objective,
    pub allow_export: bool,
    pub grid: GridConfig,
    pub pv: PvConfig,
    pub bess: BessConfig,
    pub pev: PevConfig,
    pub hvac: HvacConfig,
    pub lighting: LightingConfig,
    pub tariff: TariffConfig,
    pub feeder: FeederConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            profile: None,
            objective: Objective::Energy,
            allow_export: false,
            grid: GridConfig::default(),
            pv: PvConfig::default(),
            bess: BessConfig::default(),
            pev: PevConfig::default(),
            hvac: HvacConfig::default(),
            lighting: LightingConfig::default(),
            tariff: TariffConfig::default(),
            feeder: FeederConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub start_hour: f64,
    pub delta_t: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = TimeGrid::default_day();
        GridConfig { start_hour: g.start_hour, delta_t: g.delta_t }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PvConfig {
    pub efficiency: f64,
    pub area_m2: f64,
    pub temp_coeff: f64,
    pub ambient_ref_temp: f64,
}

impl Default for PvConfig {
    fn default() -> Self {
        let p = PvParams::default();
        PvConfig {
            efficiency: p.efficiency,
            area_m2: p.area_m2,
            temp_coeff: p.temp_coeff,
            ambient_ref_temp: p.ambient_ref_temp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BessConfig {
    pub capacity_kwh: f64,
    pub max_charge_kw: f64,
    pub max_discharge_kw: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub soc_initial: f64,
    pub degradation_rate: f64,
    /// End-of-day SOC floor; absent means `soc_initial`. Set it to `soc_min`
    /// to leave the terminal SOC free.
    pub soc_final_min: Option<f64>,
}

impl Default for BessConfig {
    fn default() -> Self {
        let b = presets::base_bess();
        BessConfig {
            capacity_kwh: b.capacity_kwh,
            max_charge_kw: b.max_charge_kw,
            max_discharge_kw: b.max_discharge_kw,
            eta_charge: b.eta_charge,
            eta_discharge: b.eta_discharge,
            soc_min: b.soc_min,
            soc_max: b.soc_max,
            soc_initial: b.soc_initial,
            degradation_rate: b.degradation_rate,
            soc_final_min: None,
        }
    }
}

impl BessConfig {
    fn storage(&self) -> StorageParams {
        StorageParams {
            capacity_kwh: self.capacity_kwh,
            max_charge_kw: self.max_charge_kw,
            max_discharge_kw: self.max_discharge_kw,
            eta_charge: self.eta_charge,
            eta_discharge: self.eta_discharge,
            soc_min: self.soc_min,
            soc_max: self.soc_max,
            soc_initial: self.soc_initial,
            degradation_rate: self.degradation_rate,
        }
    }
}

/// Vehicle: a charger-level preset with optional per-field overrides.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PevConfig {
    /// 2 or 3.
    pub level: Option<u8>,
    pub capacity_kwh: Option<f64>,
    pub max_charge_kw: Option<f64>,
    pub max_discharge_kw: Option<f64>,
    pub eta_charge: Option<f64>,
    pub eta_discharge: Option<f64>,
    pub soc_min: Option<f64>,
    pub soc_max: Option<f64>,
    pub soc_initial: Option<f64>,
    pub degradation_rate: Option<f64>,
    pub available_from_slot: Option<usize>,
    /// Exclusive.
    pub available_to_slot: Option<usize>,
    pub soc_final_min: Option<f64>,
}

pub fn charger_level(n: u8) -> Option<ChargerLevel> {
    match n {
        2 => Some(ChargerLevel::LevelII),
        3 => Some(ChargerLevel::LevelIII),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HvacConfig {
    pub slope: f64,
    pub intercept: f64,
    pub t_set_min: f64,
    pub t_set_max: f64,
}

impl Default for HvacConfig {
    fn default() -> Self {
        HvacConfig { slope: HvacParams::FITTED_SLOPE, intercept: HvacParams::FITTED_INTERCEPT, t_set_min: 24.0, t_set_max: 26.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LightingConfig {
    pub phi_min: f64,
    pub phi_max: f64,
    pub building_area_ft2: f64,
    pub area_fraction: f64,
    pub eta_lighting: f64,
}

impl Default for LightingConfig {
    fn default() -> Self {
        let l = presets::base_lighting();
        LightingConfig {
            phi_min: l.phi_min,
            phi_max: l.phi_max,
            building_area_ft2: l.building_area_ft2,
            area_fraction: l.area_fraction,
            eta_lighting: l.eta_lighting,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TariffConfig {
    /// `profile` takes the CSV price column; otherwise a preset name.
    pub prices: String,
    pub demand_charge: f64,
}

impl Default for TariffConfig {
    fn default() -> Self {
        TariffConfig { prices: "profile".into(), demand_charge: presets::DEMAND_CHARGE }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttachmentConfig {
    pub bus: String,
    pub phases: String,
    #[serde(default = "unity")]
    pub power_factor: f64,
}

fn unity() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeederConfig {
    pub pv: Option<AttachmentConfig>,
    pub bess: Option<AttachmentConfig>,
    pub pev: Option<AttachmentConfig>,
    pub building: Option<AttachmentConfig>,
}

impl FeederConfig {
    pub fn injection_map(&self) -> Result<InjectionMap> {
        let mut map = InjectionMap::default();
        let slots = [(&self.pv, &mut map.pv), (&self.bess, &mut map.bess), (&self.pev, &mut map.pev), (&self.building, &mut map.building)];
        for (cfg, target) in slots {
            if let Some(a) = cfg {
                let phases = PhaseSet::parse(&a.phases)
                    .ok_or_else(|| Error::input("feeder", format!("bad phase list `{}` for bus {}", a.phases, a.bus)))?;
                *target = Attachment { bus: a.bus.clone(), phases, power_factor: a.power_factor };
            }
        }
        Ok(map)
    }
}

impl Config {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::input(origin, e.message()))
    }

    /// Reads a config; a relative `profile` is resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text, path)?;
        if let (Some(p), Some(dir)) = (&cfg.profile, path.parent()) {
            if p.is_relative() {
                cfg.profile = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn level(&self) -> Result<ChargerLevel> {
        let n = self.pev.level.unwrap_or(2);
        charger_level(n).ok_or_else(|| Error::input("pev.level", format!("unknown charger level {n}, expected 2 or 3")))
    }

    fn tariff_preset(&self) -> Result<Option<TariffPreset>> {
        if self.tariff.prices == "profile" {
            return Ok(None);
        }
        TariffPreset::from_str(&self.tariff.prices)
            .map(Some)
            .map_err(|_| Error::input("tariff.prices", format!("unknown tariff `{}`", self.tariff.prices)))
    }

    /// The profile this config names, or the bundled sunny day.
    pub fn load_profile(&self) -> Result<Profile> {
        match &self.profile {
            Some(path) => load_profile(path),
            None => Ok(presets::synthetic_day(&TimeGrid::default_day(), Weather::Sunny)),
        }
    }

    /// Assembles the scenario; the horizon length comes from the profile.
    pub fn scenario_with(&self, mut profile: Profile) -> Result<Scenario> {
        let grid = TimeGrid { start_hour: self.grid.start_hour, delta_t: self.grid.delta_t, n_slots: profile.len() };
        if let Some(preset) = self.tariff_preset()? {
            profile.energy_price = preset.prices(&grid);
        }
        let level = self.level()?;
        let mut pev = level.pev(&grid);
        let o = &self.pev;
        let st = &mut pev.storage;
        for (field, value) in [
            (&mut st.capacity_kwh, o.capacity_kwh),
            (&mut st.max_charge_kw, o.max_charge_kw),
            (&mut st.max_discharge_kw, o.max_discharge_kw),
            (&mut st.eta_charge, o.eta_charge),
            (&mut st.eta_discharge, o.eta_discharge),
            (&mut st.soc_min, o.soc_min),
            (&mut st.soc_max, o.soc_max),
            (&mut st.soc_initial, o.soc_initial),
            (&mut st.degradation_rate, o.degradation_rate),
        ] {
            if let Some(v) = value {
                *field = v;
            }
        }
        pev.soc_final_min = o.soc_final_min.unwrap_or(pev.storage.soc_initial);
        pev.available_from_slot = o.available_from_slot.unwrap_or(pev.available_from_slot);
        pev.available_to_slot = o.available_to_slot.unwrap_or(pev.available_to_slot);

        let p = &self.pv;
        let h = &self.hvac;
        let l = &self.lighting;
        Ok(Scenario {
            grid,
            tariff: Tariff { energy_price: profile.energy_price.clone(), demand_charge: self.tariff.demand_charge },
            profile,
            pv: PvParams { efficiency: p.efficiency, area_m2: p.area_m2, temp_coeff: p.temp_coeff, ambient_ref_temp: p.ambient_ref_temp },
            bess: self.bess.storage(),
            pev,
            hvac: HvacParams { slope: h.slope, intercept: h.intercept, t_set_min: h.t_set_min, t_set_max: h.t_set_max },
            lighting: LightingParams {
                phi_min: l.phi_min,
                phi_max: l.phi_max,
                building_area_ft2: l.building_area_ft2,
                area_fraction: l.area_fraction,
                eta_lighting: l.eta_lighting,
            },
            objective_kind: self.objective.into(),
            allow_export: self.allow_export,
            bess_soc_final_min: Some(self.bess.soc_final_min.unwrap_or(self.bess.soc_initial)),
        })
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario_with(self.load_profile()?)
    }
}
