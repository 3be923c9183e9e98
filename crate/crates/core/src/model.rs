//! Scenario data model shared by every other module.
//!
//! A [`Scenario`] is the complete, immutable description of one study: the
//! area, the deployed base stations, the demand locations, the time grid,
//! prices and model parameters. It is read from and written to a TOML file
//! whose schema is documented in `docs/scenario.md`.
//!
//! Energy bookkeeping uses kWh throughout. The interval length is fixed at one
//! hour, so a power draw in kW and the energy spent in one interval are the
//! same number.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Energy drawn by a macro base station at full transmit power (kWh per interval).
pub const MACRO_ENERGY_KWH: f64 = 1.35;
/// Energy drawn by a micro base station at full transmit power (kWh per interval).
pub const MICRO_ENERGY_KWH: f64 = 0.1446;
pub const MACRO_TX_POWER_W: f64 = 20.0;
pub const MICRO_TX_POWER_W: f64 = 6.7;

pub const PANEL_USD_PER_KW: f64 = 1000.0;
pub const BATTERY_USD_PER_UNIT: f64 = 500.0;
pub const GRID_USD_PER_KWH: f64 = 0.16;
pub const BATTERY_UNIT_KWH: f64 = 2.5;
pub const AMORTIZATION_YEARS: f64 = 15.0;

pub const CARRIER_GHZ: f64 = 1.9;
pub const BANDWIDTH_HZ: f64 = 20.0e6;
pub const STREET_WIDTH_M: f64 = 20.0;
pub const BUILDING_HEIGHT_M: f64 = 20.0;
pub const BS_HEIGHT_M: f64 = 20.0;
pub const UT_HEIGHT_M: f64 = 1.5;

pub const PANEL_SIZE_MAX: u32 = 6;
pub const BATTERY_SIZE_MAX: u32 = 8;
pub const DEFAULT_RHO: f64 = 0.9;
pub const DEFAULT_ALPHA: f64 = 2.5;

pub const HOURS_PER_DAY: usize = 24;
pub const HOURS_PER_YEAR: usize = 8760;
pub const DAYS_PER_YEAR: usize = 365;
pub const PROFILE_COUNT: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BsKind {
    Macro,
    Micro,
}

impl BsKind {
    pub fn default_tx_power_w(self) -> f64 {
        match self {
            BsKind::Macro => MACRO_TX_POWER_W,
            BsKind::Micro => MICRO_TX_POWER_W,
        }
    }

    pub fn default_energy_kwh(self) -> f64 {
        match self {
            BsKind::Macro => MACRO_ENERGY_KWH,
            BsKind::Micro => MICRO_ENERGY_KWH,
        }
    }
}

impl fmt::Display for BsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BsKind::Macro => "macro",
            BsKind::Micro => "micro",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: usize,
    pub kind: BsKind,
    pub x_m: f64,
    pub y_m: f64,
    pub tx_power_w: f64,
    /// Consumption while switched on, kWh per interval.
    pub energy_kwh: f64,
}

impl BaseStation {
    /// A base station with the kind's default transmit power and consumption.
    pub fn new(id: usize, kind: BsKind, x_m: f64, y_m: f64) -> Self {
        BaseStation {
            id,
            kind,
            x_m,
            y_m,
            tx_power_w: kind.default_tx_power_w(),
            energy_kwh: kind.default_energy_kwh(),
        }
    }

    pub fn distance_to(&self, x_m: f64, y_m: f64) -> f64 {
        (self.x_m - x_m).hypot(self.y_m - y_m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationCell {
    pub id: usize,
    pub x_m: f64,
    pub y_m: f64,
    /// Index of the traffic profile (district) driving this location, `0..5`.
    pub profile_id: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width_m: f64,
    pub height_m: f64,
}

impl Area {
    pub fn contains(&self, x_m: f64, y_m: f64) -> bool {
        (0.0..=self.width_m).contains(&x_m) && (0.0..=self.height_m).contains(&y_m)
    }

    pub fn km2(&self) -> f64 {
        self.width_m * self.height_m / 1.0e6
    }
}

impl Default for Area {
    fn default() -> Self {
        Area {
            width_m: 3000.0,
            height_m: 3000.0,
        }
    }
}

/// One simulated day. Weekdays are numbered from Sunday (0) to Saturday (6).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayInfo {
    /// Day of the year, `0..365`; selects solar generation and season.
    pub day_of_year: u16,
    pub weekday: u8,
}

impl DayInfo {
    pub fn is_weekend(&self) -> bool {
        self.weekday == 0 || self.weekday == 6
    }

    /// Month index `0..12` of a non-leap year.
    pub fn month(&self) -> usize {
        month_of_day(self.day_of_year as usize)
    }

    /// Meteorological season: 0 winter (DJF), 1 spring, 2 summer, 3 autumn.
    pub fn season(&self) -> usize {
        match self.month() {
            11 | 0 | 1 => 0,
            2..=4 => 1,
            5..=7 => 2,
            _ => 3,
        }
    }
}

const MONTH_STARTS: [usize; 13] = [0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334, 365];

pub fn month_of_day(day_of_year: usize) -> usize {
    MONTH_STARTS
        .windows(2)
        .position(|w| day_of_year >= w[0] && day_of_year < w[1])
        .unwrap_or(11)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub interval_hours: f64,
    /// Number of one-hour intervals; always `24 * calendar.len()` for a valid grid.
    pub horizon: usize,
    pub calendar: Vec<DayInfo>,
}

impl TimeGrid {
    /// Consecutive days starting at `first_day_of_year`, the first one being a Sunday.
    pub fn consecutive(first_day_of_year: u16, days: usize) -> Self {
        let calendar = (0..days)
            .map(|d| DayInfo {
                day_of_year: ((first_day_of_year as usize + d) % DAYS_PER_YEAR) as u16,
                weekday: (d % 7) as u8,
            })
            .collect();
        TimeGrid {
            interval_hours: 1.0,
            horizon: days * HOURS_PER_DAY,
            calendar,
        }
    }

    pub fn full_year() -> Self {
        Self::consecutive(0, DAYS_PER_YEAR)
    }

    /// `days_per_season` consecutive days from the middle of January, April,
    /// July and October. Seven days per season gives four representative weeks.
    pub fn seasonal(days_per_season: usize) -> Self {
        const STARTS: [u16; 4] = [14, 105, 196, 288];
        let calendar = STARTS
            .iter()
            .flat_map(|&start| (0..days_per_season).map(move |d| start as usize + d))
            .enumerate()
            .map(|(k, doy)| DayInfo {
                day_of_year: (doy % DAYS_PER_YEAR) as u16,
                weekday: (k % 7) as u8,
            })
            .collect::<Vec<_>>();
        TimeGrid {
            interval_hours: 1.0,
            horizon: calendar.len() * HOURS_PER_DAY,
            calendar,
        }
    }

    pub fn days(&self) -> usize {
        self.calendar.len()
    }

    pub fn day_of(&self, t: usize) -> usize {
        t / HOURS_PER_DAY
    }

    pub fn hour_of(&self, t: usize) -> usize {
        t % HOURS_PER_DAY
    }

    /// Index into an 8760-long annual profile for simulated interval `t`.
    pub fn annual_hour(&self, t: usize) -> usize {
        self.calendar[self.day_of(t)].day_of_year as usize * HOURS_PER_DAY + self.hour_of(t)
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid::seasonal(7)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParameters {
    pub panel_usd_per_kw: f64,
    pub battery_usd_per_unit: f64,
    pub grid_usd_per_kwh: f64,
    pub battery_unit_kwh: f64,
    pub amortization_years: f64,
    /// Annual grid price escalation in percent. When set, the flat price is
    /// treated as the first-year price and opex uses the horizon average.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escalation_pct: Option<f64>,
    /// Maintenance cost added to reported totals only, never to decisions.
    #[serde(default)]
    pub maintenance_usd: f64,
    /// Deep-sleep consumption per base station (kWh per interval), reporting only.
    #[serde(default)]
    pub sleep_kwh: f64,
}

impl Default for CostParameters {
    fn default() -> Self {
        CostParameters {
            panel_usd_per_kw: PANEL_USD_PER_KW,
            battery_usd_per_unit: BATTERY_USD_PER_UNIT,
            grid_usd_per_kwh: GRID_USD_PER_KWH,
            battery_unit_kwh: BATTERY_UNIT_KWH,
            amortization_years: AMORTIZATION_YEARS,
            escalation_pct: None,
            maintenance_usd: 0.0,
            sleep_kwh: 0.0,
        }
    }
}

impl CostParameters {
    /// Grid price averaged over the amortization horizon.
    pub fn effective_grid_price(&self) -> f64 {
        match self.escalation_pct {
            Some(pct) if pct != 0.0 && self.amortization_years >= 1.0 => {
                let growth = 1.0 + pct / 100.0;
                let years = self.amortization_years.round() as i32;
                let mean = (0..years).map(|y| growth.powi(y)).sum::<f64>() / years as f64;
                self.grid_usd_per_kwh * mean
            }
            _ => self.grid_usd_per_kwh,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub carrier_ghz: f64,
    pub street_width_m: f64,
    pub building_height_m: f64,
    pub bs_height_m: f64,
    pub ut_height_m: f64,
    pub thermal_noise_dbm_per_hz: f64,
    pub noise_figure_db: f64,
    /// Pairs below this SNR are treated as unreachable.
    pub min_snr_db: f64,
    /// Lower validity bound of the path-loss formulas.
    pub min_distance_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            carrier_ghz: CARRIER_GHZ,
            street_width_m: STREET_WIDTH_M,
            building_height_m: BUILDING_HEIGHT_M,
            bs_height_m: BS_HEIGHT_M,
            ut_height_m: UT_HEIGHT_M,
            thermal_noise_dbm_per_hz: -174.0,
            noise_figure_db: 9.0,
            min_snr_db: -6.0,
            min_distance_m: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficParams {
    /// Weekday peak demand of a location at full hotspot weight, Mbit/s.
    pub peak_mbps: f64,
    pub weekend_ratio: f64,
    /// Amplitude of the uniform fluctuation as a fraction of the peak.
    pub noise_fraction: f64,
    pub nu_min: f64,
    pub nu_max: f64,
    pub floor_mbps: f64,
    /// Locations closer than this to the border only get the floor demand.
    pub edge_margin_m: f64,
    /// Half-width of the seeded per-day peak scaling, as a fraction.
    pub daily_fluctuation: f64,
    pub hotspot_bandwidth_m: f64,
    /// Lowest demand weight a location can get from the hotspot density.
    pub min_weight: f64,
    /// Kernel centers of the hotspot map; empty means uniform weight.
    #[serde(default)]
    pub hotspots: Vec<[f64; 2]>,
}

impl Default for TrafficParams {
    fn default() -> Self {
        TrafficParams {
            peak_mbps: 0.2,
            weekend_ratio: 0.8,
            noise_fraction: 0.05,
            nu_min: 1.0,
            nu_max: 3.0,
            floor_mbps: 0.01,
            edge_margin_m: 100.0,
            daily_fluctuation: 0.10,
            hotspot_bandwidth_m: 500.0,
            min_weight: 0.25,
            hotspots: Vec::new(),
        }
    }
}

/// Where the per-kW solar generation profile comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolarConfig {
    /// Preset name (stockholm, istanbul, jakarta, cairo) or a free label.
    pub city: String,
    /// Required for cities without a preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annual_kwh_per_kw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latitude_deg: Option<f64>,
    /// CSV with 8760 rows and a `kwh_per_kw` column; overrides synthesis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_file: Option<PathBuf>,
    /// Synthesis seed. Without one, the shipped preset data is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SolarConfig {
    fn default() -> Self {
        SolarConfig {
            city: "istanbul".into(),
            annual_kwh_per_kw: None,
            latitude_deg: None,
            profile_file: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    /// Sort hybrid candidates once per interval instead of after every
    /// accepted switch-off.
    #[serde(default)]
    pub hybrid_sort_once: bool,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            hybrid_sort_once: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    /// Utilization bound on the summed load weights of one base station.
    pub rho: f64,
    pub bandwidth_hz: f64,
    /// Noise power override in watts; computed from the channel parameters if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_w: Option<f64>,
    /// kWh-per-unit-load weight of the hybrid switch-off order.
    pub alpha: f64,
    pub panel_size_max: u32,
    pub battery_size_max: u32,
    pub area: Area,
    pub time: TimeGrid,
    pub costs: CostParameters,
    pub channel: ChannelParams,
    pub traffic: TrafficParams,
    pub solar: SolarConfig,
    #[serde(default)]
    pub scheduler: SchedulerConfig,
    pub base_stations: Vec<BaseStation>,
    pub locations: Vec<LocationCell>,
}

impl Scenario {
    /// A scenario with default parameters around the given deployment.
    pub fn new(base_stations: Vec<BaseStation>, locations: Vec<LocationCell>, time: TimeGrid) -> Self {
        Scenario {
            name: "scenario".into(),
            seed: 0,
            rho: DEFAULT_RHO,
            bandwidth_hz: BANDWIDTH_HZ,
            noise_w: None,
            alpha: DEFAULT_ALPHA,
            panel_size_max: PANEL_SIZE_MAX,
            battery_size_max: BATTERY_SIZE_MAX,
            area: Area::default(),
            time,
            costs: CostParameters::default(),
            channel: ChannelParams::default(),
            traffic: TrafficParams::default(),
            solar: SolarConfig::default(),
            scheduler: SchedulerConfig::default(),
            base_stations,
            locations,
        }
    }

    pub fn num_bs(&self) -> usize {
        self.base_stations.len()
    }

    pub fn num_locations(&self) -> usize {
        self.locations.len()
    }

    /// Thermal noise over the bandwidth plus the receiver noise figure, in watts.
    pub fn noise_watts(&self) -> f64 {
        self.noise_w.unwrap_or_else(|| {
            let dbm = self.channel.thermal_noise_dbm_per_hz
                + 10.0 * self.bandwidth_hz.log10()
                + self.channel.noise_figure_db;
            10f64.powf((dbm - 30.0) / 10.0)
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }

    /// Validates and returns the scenario, or the full list of violations.
    pub fn validated(self) -> Result<Self> {
        let report = validate_scenario(&self);
        if report.is_valid() {
            Ok(self)
        } else {
            Err(Error::Validation(report))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: &str) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: &'static str, detail: impl Into<String>) {
        self.violations.push(Violation {
            code,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", v.code, v.detail)?;
        }
        Ok(())
    }
}

/// Collects every invariant violation of `scenario`. An empty report means valid.
pub fn validate_scenario(scenario: &Scenario) -> ValidationReport {
    let mut report = ValidationReport::default();

    if !(scenario.rho > 0.0 && scenario.rho <= 1.0) {
        report.push("rho_out_of_range", format!("rho = {}", scenario.rho));
    }
    if scenario.base_stations.is_empty() {
        report.push("empty_bs_set", "no base stations");
    }
    if scenario.locations.is_empty() {
        report.push("empty_location_set", "no locations");
    }
    if !(scenario.bandwidth_hz > 0.0) {
        report.push("bandwidth_nonpositive", format!("B = {}", scenario.bandwidth_hz));
    }
    if let Some(n) = scenario.noise_w {
        if !(n > 0.0) {
            report.push("noise_nonpositive", format!("noise = {n}"));
        }
    }
    if !(scenario.alpha >= 0.0) {
        report.push("alpha_negative", format!("alpha = {}", scenario.alpha));
    }
    if !(scenario.area.width_m > 0.0 && scenario.area.height_m > 0.0) {
        report.push("area_nonpositive", "area must have positive extent");
    }

    for (k, bs) in scenario.base_stations.iter().enumerate() {
        if bs.id != k {
            report.push("bs_id_mismatch", format!("base station at index {k} has id {}", bs.id));
        }
        if !(bs.tx_power_w > 0.0) {
            report.push("tx_power_nonpositive", format!("bs {}", bs.id));
        }
        if !(bs.energy_kwh > 0.0) {
            report.push("energy_draw_nonpositive", format!("bs {}", bs.id));
        }
        if !scenario.area.contains(bs.x_m, bs.y_m) {
            report.push("bs_outside_area", format!("bs {}", bs.id));
        }
    }
    for (k, loc) in scenario.locations.iter().enumerate() {
        if loc.id != k {
            report.push("location_id_mismatch", format!("location at index {k} has id {}", loc.id));
        }
        if !scenario.area.contains(loc.x_m, loc.y_m) {
            report.push("location_outside_area", format!("location {}", loc.id));
        }
        if loc.profile_id >= PROFILE_COUNT {
            report.push("profile_id_out_of_range", format!("location {} profile {}", loc.id, loc.profile_id));
        }
    }

    let time = &scenario.time;
    if time.interval_hours != 1.0 {
        report.push("interval_not_hourly", format!("interval_hours = {}", time.interval_hours));
    }
    if time.horizon == 0 {
        report.push("horizon_zero", "empty time grid");
    } else if time.horizon % HOURS_PER_DAY != 0 {
        report.push("horizon_not_daily", format!("horizon = {}", time.horizon));
    }
    if time.horizon != time.calendar.len() * HOURS_PER_DAY {
        report.push(
            "calendar_mismatch",
            format!("horizon {} but {} calendar days", time.horizon, time.calendar.len()),
        );
    }
    for day in &time.calendar {
        if day.day_of_year as usize >= DAYS_PER_YEAR || day.weekday > 6 {
            report.push("calendar_day_invalid", format!("{day:?}"));
        }
    }

    let c = &scenario.costs;
    for (name, value) in [
        ("panel_usd_per_kw", c.panel_usd_per_kw),
        ("battery_usd_per_unit", c.battery_usd_per_unit),
        ("grid_usd_per_kwh", c.grid_usd_per_kwh),
        ("maintenance_usd", c.maintenance_usd),
        ("sleep_kwh", c.sleep_kwh),
    ] {
        if !(value >= 0.0) {
            report.push("negative_price", format!("{name} = {value}"));
        }
    }
    if !(c.battery_unit_kwh > 0.0) {
        report.push("battery_unit_nonpositive", format!("a_B = {}", c.battery_unit_kwh));
    }
    if !(c.amortization_years > 0.0) {
        report.push("amortization_nonpositive", format!("{}", c.amortization_years));
    }

    let t = &scenario.traffic;
    if !(t.peak_mbps > 0.0) {
        report.push("kappa_nonpositive", format!("peak = {}", t.peak_mbps));
    }
    if !(t.nu_min >= 1.0 && t.nu_max >= t.nu_min) {
        report.push("nu_out_of_range", format!("[{}, {}]", t.nu_min, t.nu_max));
    }
    if !(t.floor_mbps > 0.0) {
        report.push("floor_nonpositive", format!("floor = {}", t.floor_mbps));
    }
    if !(t.weekend_ratio > 0.0) {
        report.push("weekend_ratio_nonpositive", format!("{}", t.weekend_ratio));
    }
    if !(0.0..1.0).contains(&t.daily_fluctuation) || !(0.0..1.0).contains(&t.noise_fraction) {
        report.push("fluctuation_out_of_range", "noise and daily fluctuation must lie in [0, 1)");
    }

    report
}
