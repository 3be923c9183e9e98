//! Synthetic spatio-temporal downlink demand and the day-ahead forecast view.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Area, DayInfo, Scenario, TimeGrid, HOURS_PER_DAY, PROFILE_COUNT};

const TRAFFIC_STREAM: u64 = 0x7261_6666_6963;

/// Shape parameters of one district's daily demand curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub kappa_weekday: f64,
    pub kappa_weekend: f64,
    /// Abruptness exponent, `>= 1`.
    pub nu: f64,
    /// Phase in radians, within `[3π/4, 7π/4]`.
    pub phi: f64,
    pub noise_amplitude: f64,
}

impl ProfileParams {
    pub fn kappa(&self, weekend: bool) -> f64 {
        if weekend {
            self.kappa_weekend
        } else {
            self.kappa_weekday
        }
    }

    /// Hour of the day at which the noise-free curve peaks.
    pub fn peak_hour(&self) -> f64 {
        (6.0 - 12.0 * self.phi / PI).rem_euclid(24.0)
    }
}

/// Phase that puts the peak of the daily curve at `hour`.
pub fn phase_for_peak_hour(hour: f64) -> f64 {
    let phi = PI / 2.0 - PI * hour / 12.0;
    let lo = 0.75 * PI;
    lo + (phi - lo).rem_euclid(2.0 * PI)
}

/// Demand of one profile at hour `t` with the given noise sample, clamped to `floor`.
pub fn traffic_profile_value(params: &ProfileParams, weekend: bool, t: f64, noise: f64, floor: f64) -> f64 {
    let kappa = params.kappa(weekend);
    let wave = 1.0 + (PI * t / 12.0 + params.phi).sin();
    let value = kappa / 2f64.powf(params.nu) * wave.max(0.0).powf(params.nu) + noise;
    value.max(floor)
}

/// Sum of Gaussian kernels marking the districts of the area.
#[derive(Debug, Clone, PartialEq)]
pub struct HotspotMap {
    pub centers: Vec<[f64; 2]>,
    pub bandwidth_m: f64,
}

impl HotspotMap {
    /// Five kernels at seeded positions away from the border.
    pub fn random(area: Area, bandwidth_m: f64, rng: &mut impl Rng) -> Self {
        let mx = 0.15 * area.width_m;
        let my = 0.15 * area.height_m;
        let centers = (0..PROFILE_COUNT)
            .map(|_| {
                [
                    rng.gen_range(mx..area.width_m - mx),
                    rng.gen_range(my..area.height_m - my),
                ]
            })
            .collect();
        HotspotMap { centers, bandwidth_m }
    }

    fn kernel(&self, k: usize, x: f64, y: f64) -> f64 {
        let [cx, cy] = self.centers[k];
        let d2 = (x - cx).powi(2) + (y - cy).powi(2);
        (-d2 / (2.0 * self.bandwidth_m * self.bandwidth_m)).exp()
    }

    pub fn density(&self, x: f64, y: f64) -> f64 {
        (0..self.centers.len()).map(|k| self.kernel(k, x, y)).sum()
    }

    /// Index of the kernel that dominates at `(x, y)`; ties go to the lower index.
    pub fn district(&self, x: f64, y: f64) -> u8 {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for k in 0..self.centers.len() {
            let v = self.kernel(k, x, y);
            if v > best_v {
                best = k;
                best_v = v;
            }
        }
        best as u8
    }
}

/// Five profiles whose peaks fall on distinct hours between 09:00 and 21:00.
pub fn draw_profiles(scenario: &Scenario, rng: &mut impl Rng) -> Vec<ProfileParams> {
    let p = &scenario.traffic;
    // Peak hours at least two hours apart keep the district peaks distinguishable.
    let hours = loop {
        let mut hours = rand::seq::index::sample(rng, 13, PROFILE_COUNT as usize)
            .into_iter()
            .map(|k| 9 + k as u32)
            .collect::<Vec<_>>();
        hours.sort_unstable();
        if hours.windows(2).all(|w| w[1] - w[0] >= 2) {
            break hours;
        }
    };
    hours
        .into_iter()
        .map(|h| {
            let kappa = p.peak_mbps * rng.gen_range(0.8..1.2);
            let nu = if p.nu_max > p.nu_min {
                rng.gen_range(p.nu_min..p.nu_max)
            } else {
                p.nu_min
            };
            ProfileParams {
                kappa_weekday: kappa,
                kappa_weekend: kappa * p.weekend_ratio,
                nu,
                phi: phase_for_peak_hour(h as f64),
                noise_amplitude: p.noise_fraction * kappa,
            }
        })
        .collect()
}

/// Actual demand `U[t][j]` in Mbit/s plus the day used to forecast each day.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficGrid {
    num_locations: usize,
    horizon: usize,
    actual: Vec<f64>,
    forecast_source: Vec<usize>,
    pub profiles: Vec<ProfileParams>,
}

impl TrafficGrid {
    /// Wraps an interval-major demand matrix; `actual.len()` must be `horizon * num_locations`.
    pub fn from_actual(time: &TimeGrid, num_locations: usize, actual: Vec<f64>) -> Result<Self> {
        if actual.len() != time.horizon * num_locations {
            return Err(Error::Data(format!(
                "demand has {} entries, expected {} x {}",
                actual.len(),
                time.horizon,
                num_locations
            )));
        }
        if let Some(v) = actual.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Data(format!("demand entries must be finite and positive, found {v}")));
        }
        Ok(TrafficGrid {
            num_locations,
            horizon: time.horizon,
            actual,
            forecast_source: forecast_sources(&time.calendar),
            profiles: Vec::new(),
        })
    }

    pub fn num_locations(&self) -> usize {
        self.num_locations
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn actual(&self, t: usize) -> &[f64] {
        &self.actual[t * self.num_locations..(t + 1) * self.num_locations]
    }

    /// Mutable access for building what-if instances.
    pub fn actual_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.actual[t * self.num_locations..(t + 1) * self.num_locations]
    }

    /// Forecast of interval `t`: the same hour of the day selected by [`forecast_day`].
    pub fn forecast(&self, t: usize) -> &[f64] {
        let src = self.forecast_source[t / HOURS_PER_DAY] * HOURS_PER_DAY + t % HOURS_PER_DAY;
        self.actual(src)
    }

    /// Day whose actuals forecast `day`.
    pub fn forecast_source(&self, day: usize) -> usize {
        self.forecast_source[day]
    }

    /// Replaces the forecast mapping, e.g. to forecast every day with its own actuals.
    pub fn set_forecast_sources(&mut self, sources: Vec<usize>) {
        assert_eq!(sources.len(), self.forecast_source.len());
        self.forecast_source = sources;
    }

    /// Total demand over the horizon in Mbit (rates times one-hour intervals).
    pub fn total_mbit(&self) -> f64 {
        self.actual.iter().sum::<f64>() * 3600.0
    }
}

/// Forecast slice for `day`: 24 rows of per-location demand, interval-major.
pub fn forecast_day(grid: &TrafficGrid, day: usize) -> &[f64] {
    let src = grid.forecast_source(day);
    let n = grid.num_locations;
    &grid.actual[src * HOURS_PER_DAY * n..(src + 1) * HOURS_PER_DAY * n]
}

/// Weekdays are predicted by the latest earlier weekday, weekend days by the
/// latest earlier day with the same weekday. Days without history use themselves.
pub fn forecast_sources(calendar: &[DayInfo]) -> Vec<usize> {
    (0..calendar.len())
        .map(|d| {
            let today = calendar[d];
            (0..d)
                .rev()
                .find(|&e| {
                    let other = calendar[e];
                    if today.is_weekend() {
                        other.weekday == today.weekday
                    } else {
                        !other.is_weekend()
                    }
                })
                .unwrap_or(d)
        })
        .collect()
}

/// Generates the demand grid of `scenario`. A pure function of the scenario and its seed.
pub fn build_demand_grid(scenario: &Scenario) -> TrafficGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed ^ TRAFFIC_STREAM);
    let p = &scenario.traffic;
    let profiles = draw_profiles(scenario, &mut rng);

    let map = HotspotMap {
        centers: p.hotspots.clone(),
        bandwidth_m: p.hotspot_bandwidth_m,
    };
    let densities: Vec<f64> = scenario
        .locations
        .iter()
        .map(|l| if map.centers.is_empty() { 1.0 } else { map.density(l.x_m, l.y_m) })
        .collect();
    let max_density = densities.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let area = scenario.area;
    let margin = p.edge_margin_m;
    let weights: Vec<Option<f64>> = scenario
        .locations
        .iter()
        .zip(&densities)
        .map(|(l, &d)| {
            let edge = l.x_m < margin
                || l.y_m < margin
                || l.x_m > area.width_m - margin
                || l.y_m > area.height_m - margin;
            if edge {
                None
            } else {
                Some(p.min_weight + (1.0 - p.min_weight) * d / max_density)
            }
        })
        .collect();

    let days = scenario.time.days();
    let daily: Vec<[f64; PROFILE_COUNT as usize]> = (0..days)
        .map(|_| {
            let mut f = [1.0; PROFILE_COUNT as usize];
            for v in &mut f {
                *v = 1.0 + p.daily_fluctuation * rng.gen_range(-1.0..=1.0);
            }
            f
        })
        .collect();

    let n = scenario.num_locations();
    let horizon = scenario.time.horizon;
    let mut actual = Vec::with_capacity(horizon * n);
    for t in 0..horizon {
        let day = t / HOURS_PER_DAY;
        let hour = (t % HOURS_PER_DAY) as f64;
        let weekend = scenario.time.calendar[day].is_weekend();
        for (loc, w) in scenario.locations.iter().zip(&weights) {
            let z = loc.profile_id as usize;
            let prof = &profiles[z];
            let noise = prof.noise_amplitude * rng.gen_range(-1.0..=1.0);
            let value = match w {
                Some(w) => {
                    let scaled = ProfileParams {
                        kappa_weekday: prof.kappa_weekday * daily[day][z],
                        kappa_weekend: prof.kappa_weekend * daily[day][z],
                        ..*prof
                    };
                    w * traffic_profile_value(&scaled, weekend, hour, noise, 0.0)
                }
                None => 0.0,
            };
            actual.push(value.max(p.floor_mbps));
        }
    }

    TrafficGrid {
        num_locations: n,
        horizon,
        actual,
        forecast_source: forecast_sources(&scenario.time.calendar),
        profiles,
    }
}

pub fn write_demand_csv<W: Write>(grid: &TrafficGrid, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["location_id", "t", "mbps"])?;
    for t in 0..grid.horizon {
        for (j, v) in grid.actual(t).iter().enumerate() {
            w.write_record([j.to_string(), t.to_string(), v.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<demand csv>", e))?;
    Ok(())
}

/// Reads a `location_id,t,mbps` trace for `scenario`; every `(j, t)` must appear exactly once.
pub fn read_demand_csv<R: Read>(scenario: &Scenario, input: R) -> Result<TrafficGrid> {
    #[derive(Deserialize)]
    struct Row {
        location_id: usize,
        t: usize,
        mbps: f64,
    }
    let n = scenario.num_locations();
    let horizon = scenario.time.horizon;
    let mut actual = vec![f64::NAN; n * horizon];
    let mut rdr = csv::Reader::from_reader(input);
    for row in rdr.deserialize() {
        let row: Row = row?;
        if row.location_id >= n || row.t >= horizon {
            return Err(Error::Data(format!("row ({}, {}) out of range", row.location_id, row.t)));
        }
        let slot = &mut actual[row.t * n + row.location_id];
        if !slot.is_nan() {
            return Err(Error::Data(format!("duplicate row ({}, {})", row.location_id, row.t)));
        }
        *slot = row.mbps;
    }
    TrafficGrid::from_actual(&scenario.time, n, actual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn prof(kappa: f64, nu: f64, phi: f64) -> ProfileParams {
        ProfileParams {
            kappa_weekday: kappa,
            kappa_weekend: kappa,
            nu,
            phi,
            noise_amplitude: 0.0,
        }
    }

    #[test]
    fn profile_peak() {
        // sin(3π/2 + π) = 1
        let v = traffic_profile_value(&prof(10.0, 1.0, PI), false, 18.0, 0.0, 0.01);
        assert_relative_eq!(v, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn profile_trough_hits_floor() {
        let v = traffic_profile_value(&prof(10.0, 1.0, PI), false, 6.0, 0.0, 0.01);
        assert_eq!(v, 0.01);
        let raw = traffic_profile_value(&prof(10.0, 1.0, PI), false, 6.0, 0.0, f64::NEG_INFINITY);
        assert!(raw.abs() < 1e-12);
    }

    #[test]
    fn profile_midpoint() {
        let v = traffic_profile_value(&prof(8.0, 2.0, PI), false, 0.0, 0.0, 0.01);
        assert_relative_eq!(v, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn phase_lands_in_range_and_peaks_where_asked() {
        for h in 9..=21 {
            let phi = phase_for_peak_hour(h as f64);
            assert!((0.75 * PI - 1e-12..=1.75 * PI + 1e-12).contains(&phi), "h={h} phi={phi}");
            assert_relative_eq!(prof(1.0, 1.0, phi).peak_hour(), h as f64, epsilon = 1e-9);
        }
    }

    fn cal(weekdays: &[u8]) -> Vec<DayInfo> {
        weekdays
            .iter()
            .map(|&w| DayInfo {
                day_of_year: 0,
                weekday: w,
            })
            .collect()
    }

    #[test]
    fn forecast_mapping_follows_weekday_rules() {
        // Two weeks starting on a Sunday.
        let c = cal(&[0, 1, 2, 3, 4, 5, 6, 0, 1, 2, 3, 4, 5, 6]);
        let src = forecast_sources(&c);
        assert_eq!(src[0], 0);
        assert_eq!(src[1], 1);
        assert_eq!(src[2], 1);
        assert_eq!(src[6], 6);
        assert_eq!(src[7], 0);
        assert_eq!(src[8], 5);
        assert_eq!(src[13], 6);
        for (d, &s) in src.iter().enumerate() {
            assert!(s < d || s == d && !src[..d].iter().enumerate().any(|(e, _)| {
                let (a, b) = (c[e], c[d]);
                if b.is_weekend() { a.weekday == b.weekday } else { !a.is_weekend() }
            }));
        }
    }
}
