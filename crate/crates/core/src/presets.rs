//! Named parameter bundles: the base-case building, charger levels, utility
//! tariffs and the bundled synthetic weather days.
//!
//! The weather days are synthetic. They are shaped like a clear and an
//! overcast summer day at the test site, not measured data.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use crate::domain::{
    HvacParams, LightingParams, ObjectiveKind, PevParams, Profile, PvParams, Scenario, StorageParams, Tariff, TimeGrid,
};

/// Default storage wear cost, $/kWh.
pub const DEFAULT_DEGRADATION_RATE: f64 = 0.10;
/// Peak demand charge, $/kW.
pub const DEMAND_CHARGE: f64 = 3.83;
/// Floor area of the test building, ft2.
pub const BUILDING_AREA_FT2: f64 = 21_352.0;
/// Constant plug load of the synthetic building, kW.
pub const MISC_LOAD_KW: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChargerLevel {
    /// 64 kWh vehicle on a 7 kW bidirectional charger.
    LevelII,
    /// 100 kWh vehicle on a 50 kW DC charger.
    LevelIII,
}

impl ChargerLevel {
    pub fn storage(self) -> StorageParams {
        let (capacity_kwh, rate) = match self {
            ChargerLevel::LevelII => (64.0, 7.0),
            ChargerLevel::LevelIII => (100.0, 50.0),
        };
        StorageParams {
            capacity_kwh,
            max_charge_kw: rate,
            max_discharge_kw: rate,
            eta_charge: 0.95,
            eta_discharge: 0.95,
            soc_min: 0.2,
            soc_max: 1.0,
            soc_initial: 0.5,
            degradation_rate: DEFAULT_DEGRADATION_RATE,
        }
    }

    /// Plugged in for the whole horizon, ending no lower than it started.
    pub fn pev(self, grid: &TimeGrid) -> PevParams {
        let storage = self.storage();
        PevParams {
            storage,
            available_from_slot: grid.slot_at_hour(9.0),
            available_to_slot: grid.slot_at_hour(21.0),
            soc_final_min: storage.soc_initial,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            ChargerLevel::LevelII => 2,
            ChargerLevel::LevelIII => 3,
        }
    }
}

impl fmt::Display for ChargerLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChargerLevel::LevelII => f.write_str("Level II"),
            ChargerLevel::LevelIII => f.write_str("Level III"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TariffPreset {
    /// Investor-owned utility time-of-use rate.
    IouTou,
    /// Municipal utility time-of-use rate.
    MuniTou,
    /// Municipal utility flat rate.
    MuniFlat,
}

impl TariffPreset {
    pub const ALL: [TariffPreset; 3] = [TariffPreset::IouTou, TariffPreset::MuniTou, TariffPreset::MuniFlat];

    /// $/kWh at a given hour of day. On-peak is 16:00 to 21:00.
    pub fn price_at(self, hour: f64) -> f64 {
        let on_peak = (16.0..21.0).contains(&hour);
        match (self, on_peak) {
            (TariffPreset::IouTou, false) => 0.22,
            (TariffPreset::IouTou, true) => 0.41,
            (TariffPreset::MuniTou, false) => 0.0874,
            (TariffPreset::MuniTou, true) => 0.1079,
            (TariffPreset::MuniFlat, _) => 0.1684,
        }
    }

    /// Prices sampled at each slot start.
    pub fn prices(self, grid: &TimeGrid) -> Vec<f64> {
        (0..grid.n_slots).map(|s| self.price_at(grid.slot_start_hour(s) + 1e-9)).collect()
    }

    pub fn tariff(self, grid: &TimeGrid) -> Tariff {
        Tariff { energy_price: self.prices(grid), demand_charge: DEMAND_CHARGE }
    }

    pub fn name(self) -> &'static str {
        match self {
            TariffPreset::IouTou => "iou-tou",
            TariffPreset::MuniTou => "muni-tou",
            TariffPreset::MuniFlat => "muni-flat",
        }
    }
}

impl FromStr for TariffPreset {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        TariffPreset::ALL.into_iter().find(|t| t.name().eq_ignore_ascii_case(s)).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Weather {
    Sunny,
    Cloudy,
}

impl Weather {
    pub fn name(self) -> &'static str {
        match self {
            Weather::Sunny => "sunny",
            Weather::Cloudy => "cloudy",
        }
    }
}

impl FromStr for Weather {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "sunny" => Ok(Weather::Sunny),
            "cloudy" => Ok(Weather::Cloudy),
            _ => Err(()),
        }
    }
}

fn clear_sky_ghi(hour: f64) -> f64 {
    const SUNRISE: f64 = 6.0;
    const SUNSET: f64 = 19.5;
    if hour <= SUNRISE || hour >= SUNSET {
        return 0.0;
    }
    let x = libm::sin(PI * (hour - SUNRISE) / (SUNSET - SUNRISE));
    0.98 * libm::pow(x, 1.3)
}

// Overcast transmittance with passing cloud banks; deterministic.
fn cloud_factor(slot: usize) -> f64 {
    const PATTERN: [f64; 8] = [0.55, 0.35, 0.2, 0.45, 0.6, 0.25, 0.15, 0.4];
    PATTERN[(slot * 5 + slot / 3) % PATTERN.len()]
}

/// Synthetic outdoor temperature: 24 degC at 9:00 rising to about 34 degC mid afternoon.
fn outdoor_temp(hour: f64, weather: Weather) -> f64 {
    let base = 29.0 + 5.0 * libm::sin(PI * (hour - 11.0) / 10.0);
    match weather {
        Weather::Sunny => base,
        Weather::Cloudy => base - 3.0,
    }
}

/// Bundled synthetic profile on `grid`, priced with the IOU tariff.
pub fn synthetic_day(grid: &TimeGrid, weather: Weather) -> Profile {
    let n = grid.n_slots;
    let mut p = Profile {
        ghi: Vec::with_capacity(n),
        t_out: Vec::with_capacity(n),
        energy_price: TariffPreset::IouTou.prices(grid),
        misc_load: alloc::vec![MISC_LOAD_KW; n],
    };
    for slot in 0..n {
        let h = grid.slot_mid_hour(slot);
        let clear = clear_sky_ghi(h);
        let ghi = match weather {
            Weather::Sunny => clear,
            Weather::Cloudy => clear * cloud_factor(slot),
        };
        p.ghi.push(round4(ghi));
        p.t_out.push(round4(outdoor_temp(h, weather)));
    }
    p
}

// Four decimals keeps the CSV fixtures and the in-memory profile identical.
fn round4(x: f64) -> f64 {
    libm::round(x * 1e4) / 1e4
}

pub fn base_bess() -> StorageParams {
    StorageParams {
        capacity_kwh: 150.0,
        max_charge_kw: 50.0,
        max_discharge_kw: 50.0,
        eta_charge: 0.95,
        eta_discharge: 0.95,
        soc_min: 0.4,
        soc_max: 1.0,
        soc_initial: 0.7,
        degradation_rate: DEFAULT_DEGRADATION_RATE,
    }
}

pub fn base_lighting() -> LightingParams {
    LightingParams {
        phi_min: 0.10,
        phi_max: 0.15,
        building_area_ft2: BUILDING_AREA_FT2,
        area_fraction: 0.5,
        eta_lighting: 1.0,
    }
}

/// Scenario from a profile with base-case devices. The tariff mirrors the
/// profile's price column and the BESS must end the day at its initial SOC.
pub fn scenario_from_profile(grid: TimeGrid, profile: Profile, level: ChargerLevel) -> Scenario {
    let tariff = Tariff { energy_price: profile.energy_price.clone(), demand_charge: DEMAND_CHARGE };
    let bess = base_bess();
    Scenario {
        grid,
        pev: level.pev(&grid),
        profile,
        pv: PvParams::default(),
        bess_soc_final_min: Some(bess.soc_initial),
        bess,
        hvac: HvacParams::fitted(24.0, 26.0),
        lighting: base_lighting(),
        tariff,
        objective_kind: ObjectiveKind::EnergyPlusDegradation,
        allow_export: false,
    }
}

/// Sunny day, 150 kWh/50 kW BESS, Level II vehicle, half the floor lit,
/// 24 to 26 degC, IOU prices, constant plug load.
pub fn base_case() -> Scenario {
    let grid = TimeGrid::default_day();
    scenario_from_profile(grid, synthetic_day(&grid, Weather::Sunny), ChargerLevel::LevelII)
}
