//! Per-kW solar generation profiles.
//!
//! Generation is linear in panel size, so a profile holds kWh produced by one
//! kW of panel in each interval. Synthetic profiles follow the sun's elevation
//! over the day, the seasonal change of day length and a seeded day-to-day
//! clearness factor, and are scaled so that one year sums to the site's total.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SolarConfig, TimeGrid, DAYS_PER_YEAR, HOURS_PER_DAY, HOURS_PER_YEAR};

/// Environment variable that overrides the directory with shipped preset profiles.
pub const DATA_DIR_ENV: &str = "HEBRAN_DATA_DIR";
/// Seed used to produce the shipped preset profiles.
pub const PRESET_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum City {
    Stockholm,
    Istanbul,
    Jakarta,
    Cairo,
}

impl City {
    pub const ALL: [City; 4] = [City::Stockholm, City::Istanbul, City::Jakarta, City::Cairo];

    pub fn name(self) -> &'static str {
        match self {
            City::Stockholm => "stockholm",
            City::Istanbul => "istanbul",
            City::Jakarta => "jakarta",
            City::Cairo => "cairo",
        }
    }

    /// Annual generation of a 1 kW panel, kWh.
    pub fn annual_kwh_per_kw(self) -> f64 {
        match self {
            City::Stockholm => 986.0,
            City::Istanbul => 1349.0,
            City::Jakarta => 1359.0,
            City::Cairo => 1748.0,
        }
    }

    pub fn site(self) -> SolarSite {
        let (latitude_deg, cloudiness) = match self {
            City::Stockholm => (59.33, 0.55),
            City::Istanbul => (41.01, 0.40),
            City::Jakarta => (-6.21, 0.45),
            City::Cairo => (30.04, 0.12),
        };
        SolarSite {
            name: self.name().to_string(),
            annual_kwh_per_kw: self.annual_kwh_per_kw(),
            latitude_deg,
            cloudiness,
        }
    }
}

impl std::fmt::Display for City {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for City {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        City::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownCity(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolarSite {
    pub name: String,
    pub annual_kwh_per_kw: f64,
    pub latitude_deg: f64,
    /// Largest daily reduction of clear-sky output, in `[0, 1)`.
    pub cloudiness: f64,
}

impl SolarSite {
    /// Resolves a scenario's solar section to a site description.
    pub fn resolve(config: &SolarConfig) -> Result<Self> {
        let mut site = match config.city.parse::<City>() {
            Ok(city) => city.site(),
            Err(_) => {
                let total = config
                    .annual_kwh_per_kw
                    .ok_or_else(|| Error::UnknownCity(config.city.clone()))?;
                SolarSite {
                    name: config.city.clone(),
                    annual_kwh_per_kw: total,
                    latitude_deg: 35.0,
                    cloudiness: 0.3,
                }
            }
        };
        if let Some(total) = config.annual_kwh_per_kw {
            site.annual_kwh_per_kw = total;
        }
        if let Some(lat) = config.latitude_deg {
            site.latitude_deg = lat;
        }
        Ok(site)
    }
}

/// Sine of the solar elevation at `latitude_deg`, day `day_of_year`, local solar time `hour`.
pub fn sun_elevation_sin(latitude_deg: f64, day_of_year: usize, hour: f64) -> f64 {
    let lat = latitude_deg.to_radians();
    let decl = (23.44f64).to_radians() * (2.0 * PI * (284.0 + day_of_year as f64 + 1.0) / 365.0).sin();
    let hour_angle = (15.0 * (hour - 12.0)).to_radians();
    lat.sin() * decl.sin() + lat.cos() * decl.cos() * hour_angle.cos()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationProfile {
    /// kWh per kW of panel, one entry per interval.
    pub kwh_per_kw: Vec<f64>,
    /// Annual total the profile was scaled to, kWh per kW per year.
    pub annual_total: f64,
}

impl GenerationProfile {
    pub fn len(&self) -> usize {
        self.kwh_per_kw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kwh_per_kw.is_empty()
    }

    pub fn at(&self, t: usize) -> f64 {
        self.kwh_per_kw[t]
    }

    pub fn total(&self) -> f64 {
        self.kwh_per_kw.iter().sum()
    }

    /// Picks the hours of each calendar day out of an 8760-entry annual profile.
    pub fn resample(&self, time: &TimeGrid) -> Result<Self> {
        if self.len() != HOURS_PER_YEAR {
            return Err(Error::Data(format!("annual profile needs {HOURS_PER_YEAR} rows, has {}", self.len())));
        }
        let kwh_per_kw = (0..time.horizon).map(|t| self.kwh_per_kw[time.annual_hour(t)]).collect();
        Ok(GenerationProfile {
            kwh_per_kw,
            annual_total: self.annual_total,
        })
    }

    /// Mean generation per calendar month of an annual profile, kWh/kW/day.
    pub fn monthly_daily_means(&self) -> [f64; 12] {
        let mut sums = [0.0; 12];
        let mut days = [0usize; 12];
        for d in 0..DAYS_PER_YEAR.min(self.len() / HOURS_PER_DAY) {
            let m = crate::model::month_of_day(d);
            sums[m] += self.kwh_per_kw[d * HOURS_PER_DAY..(d + 1) * HOURS_PER_DAY].iter().sum::<f64>();
            days[m] += 1;
        }
        let mut out = [0.0; 12];
        for m in 0..12 {
            out[m] = if days[m] > 0 { sums[m] / days[m] as f64 } else { 0.0 };
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kwh_per_kw"])?;
        for v in &self.kwh_per_kw {
            w.write_record([v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<profile csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            kwh_per_kw: f64,
        }
        let mut rdr = csv::Reader::from_reader(input);
        let mut values = Vec::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            if !(row.kwh_per_kw.is_finite() && row.kwh_per_kw >= 0.0) {
                return Err(Error::Data(format!("negative or non-finite generation {}", row.kwh_per_kw)));
            }
            values.push(row.kwh_per_kw);
        }
        let total = values.iter().sum();
        Ok(GenerationProfile {
            kwh_per_kw: values,
            annual_total: total,
        })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file)
    }

    /// The scenario's generation over its own time grid.
    ///
    /// Lookup order: explicit profile file, seeded synthesis, preset file in
    /// the data directory, synthesis with the preset seed.
    pub fn for_scenario(config: &SolarConfig, time: &TimeGrid) -> Result<Self> {
        let annual = if let Some(path) = &config.profile_file {
            Self::load_csv(path)?
        } else if let Some(seed) = config.seed {
            annual_profile(&SolarSite::resolve(config)?, seed)
        } else {
            let site = SolarSite::resolve(config)?;
            let preset = preset_path(&site.name);
            match preset.filter(|p| p.exists()) {
                Some(path) => Self::load_csv(path)?,
                None => annual_profile(&site, PRESET_SEED),
            }
        };
        annual.resample(time)
    }
}

/// Directory holding `<city>.csv` preset profiles.
pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data")))
}

fn preset_path(name: &str) -> Option<PathBuf> {
    name.parse::<City>()
        .ok()
        .map(|c| data_dir().join(format!("{}.csv", c.name())))
}

/// A full 8760-hour profile for `site`, summing to its annual total.
pub fn annual_profile(site: &SolarSite, seed: u64) -> GenerationProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x736f_6c61_72);
    let mut raw = Vec::with_capacity(HOURS_PER_YEAR);
    for day in 0..DAYS_PER_YEAR {
        let clearness = 1.0 - site.cloudiness * rng.gen::<f64>().powf(1.5);
        for hour in 0..HOURS_PER_DAY {
            let e = sun_elevation_sin(site.latitude_deg, day, hour as f64 + 0.5);
            raw.push(if e > 0.0 { clearness * e.powf(1.2) } else { 0.0 });
        }
    }
    let sum: f64 = raw.iter().sum();
    let scale = site.annual_kwh_per_kw / sum;
    GenerationProfile {
        kwh_per_kw: raw.into_iter().map(|v| v * scale).collect(),
        annual_total: site.annual_kwh_per_kw,
    }
}

pub fn synth_generation_profile(site: &SolarSite, time: &TimeGrid, seed: u64) -> GenerationProfile {
    annual_profile(site, seed)
        .resample(time)
        .expect("annual profiles have 8760 entries")
}
