//! City and traffic-density presets: deployment, location grid and hotspots.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::build_service_matrix;
use crate::energy::City;
use crate::error::{Error, Result};
use crate::model::{Area, BaseStation, BsKind, LocationCell, Scenario, SolarConfig, TimeGrid};
use crate::traffic::HotspotMap;

const DEPLOY_STREAM: u64 = 0x6465_706c_6f79;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficDensity {
    Sparse,
    Normal,
    Dense,
    HighDense,
}

impl TrafficDensity {
    pub const ALL: [TrafficDensity; 4] = [
        TrafficDensity::Sparse,
        TrafficDensity::Normal,
        TrafficDensity::Dense,
        TrafficDensity::HighDense,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrafficDensity::Sparse => "sparse",
            TrafficDensity::Normal => "normal",
            TrafficDensity::Dense => "dense",
            TrafficDensity::HighDense => "high",
        }
    }

    /// Base stations of the full-size configuration.
    pub fn full_bs_count(self) -> usize {
        match self {
            TrafficDensity::Sparse => 34,
            TrafficDensity::Normal => 67,
            TrafficDensity::Dense => 102,
            TrafficDensity::HighDense => 134,
        }
    }

    /// Base stations of the desk-scale configuration.
    pub fn desk_bs_count(self) -> usize {
        10 * (self as usize + 1)
    }

    /// Peak demand scale relative to the sparse preset.
    pub fn traffic_multiplier(self) -> f64 {
        (self as usize + 1) as f64
    }
}

impl fmt::Display for TrafficDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrafficDensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "sparse" => Ok(TrafficDensity::Sparse),
            "normal" => Ok(TrafficDensity::Normal),
            "dense" => Ok(TrafficDensity::Dense),
            "high" | "high_dense" | "highdense" => Ok(TrafficDensity::HighDense),
            other => Err(Error::Data(format!("unknown traffic density {other:?}"))),
        }
    }
}

/// Knobs of the preset generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetOptions {
    /// Use the desk-scale base station counts.
    pub desk_scale: bool,
    /// Locations per side of the square location grid.
    pub grid_side: usize,
    /// Macro stations, laid out on a near-square grid.
    pub macros: usize,
    /// Weekday peak demand of a full-weight location in the sparse preset, Mbit/s.
    pub base_peak_mbps: f64,
    pub time: TimeGrid,
    /// Spread of micro positions around their hotspot center, m.
    pub micro_spread_m: f64,
    /// Maximum displacement of a macro from its grid point, m.
    pub macro_jitter_m: f64,
}

impl Default for PresetOptions {
    fn default() -> Self {
        PresetOptions {
            desk_scale: true,
            grid_side: 60,
            macros: 9,
            base_peak_mbps: 0.2,
            time: TimeGrid::seasonal(7),
            micro_spread_m: 350.0,
            macro_jitter_m: 100.0,
        }
    }
}

/// A `side` x `side` grid of location cells at cell centers.
pub fn location_grid(area: Area, side: usize, hotspots: &HotspotMap) -> Vec<LocationCell> {
    let dx = area.width_m / side as f64;
    let dy = area.height_m / side as f64;
    (0..side * side)
        .map(|k| {
            let (x, y) = ((k % side) as f64 * dx + dx / 2.0, (k / side) as f64 * dy + dy / 2.0);
            LocationCell {
                id: k,
                x_m: x,
                y_m: y,
                profile_id: hotspots.district(x, y),
            }
        })
        .collect()
}

/// Macros on a jittered grid, micros scattered around the hotspot centers in turn.
pub fn deploy(
    area: Area,
    hotspots: &HotspotMap,
    macros: usize,
    micros: usize,
    opts: &PresetOptions,
    rng: &mut impl Rng,
) -> Vec<BaseStation> {
    let cols = (macros as f64).sqrt().ceil().max(1.0) as usize;
    let rows = macros.div_ceil(cols).max(1);
    let mut out = Vec::with_capacity(macros + micros);
    for k in 0..macros {
        let (c, r) = (k % cols, k / cols);
        let gx = (c as f64 + 0.5) * area.width_m / cols as f64;
        let gy = (r as f64 + 0.5) * area.height_m / rows as f64;
        let j = opts.macro_jitter_m;
        let x = (gx + rng.gen_range(-j..=j)).clamp(0.0, area.width_m);
        let y = (gy + rng.gen_range(-j..=j)).clamp(0.0, area.height_m);
        out.push(BaseStation::new(out.len(), BsKind::Macro, x, y));
    }
    let margin = 50.0;
    for k in 0..micros {
        let [cx, cy] = if hotspots.centers.is_empty() {
            [area.width_m / 2.0, area.height_m / 2.0]
        } else {
            hotspots.centers[k % hotspots.centers.len()]
        };
        let x = (cx + opts.micro_spread_m * rng.sample::<f64, _>(StandardNormal)).clamp(margin, area.width_m - margin);
        let y = (cy + opts.micro_spread_m * rng.sample::<f64, _>(StandardNormal)).clamp(margin, area.height_m - margin);
        out.push(BaseStation::new(out.len(), BsKind::Micro, x, y));
    }
    out
}

/// The scenario of one city and traffic density.
///
/// Deployment is redrawn until every location is reachable.
pub fn preset_scenario(city: City, density: TrafficDensity, seed: u64, opts: &PresetOptions) -> Result<Scenario> {
    let area = Area::default();
    let count = if opts.desk_scale {
        density.desk_bs_count()
    } else {
        density.full_bs_count()
    };
    let macros = opts.macros.min(count);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ DEPLOY_STREAM ^ (density as u64) << 32);
    let mut scenario = None;
    for _ in 0..64 {
        let mut s = Scenario::new(Vec::new(), Vec::new(), opts.time.clone());
        let hotspots = HotspotMap::random(area, s.traffic.hotspot_bandwidth_m, &mut rng);
        s.base_stations = deploy(area, &hotspots, macros, count - macros, opts, &mut rng);
        s.locations = location_grid(area, opts.grid_side, &hotspots);
        s.traffic.hotspots = hotspots.centers;
        if build_service_matrix(&s).uncovered_locations().is_empty() {
            scenario = Some(s);
            break;
        }
    }
    let mut s = scenario.ok_or_else(|| Error::Data("could not find a deployment covering every location".into()))?;
    s.name = format!("{}-{}", city.name(), density.name());
    s.seed = seed;
    s.area = area;
    s.traffic.peak_mbps = opts.base_peak_mbps * density.traffic_multiplier();
    s.solar = SolarConfig {
        city: city.name().into(),
        ..SolarConfig::default()
    };
    Ok(s)
}
