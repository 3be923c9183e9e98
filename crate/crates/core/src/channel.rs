//! Path loss, SNR and Shannon service rates between base stations and locations.
//!
//! Macro cells use the urban-macro NLOS model and micro cells the urban-micro
//! (hexagonal layout) NLOS model of ITU-R M.2135. Interference is not modeled.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BaseStation, BsKind, ChannelParams, LocationCell, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLoss {
    pub db: f64,
    /// The distance was below the model's validity range and was clamped.
    pub clamped: bool,
}

/// Urban-macro NLOS path loss in dB, `d` in meters, valid for 10 m < d < 5 km.
pub fn uma_nlos_db(d_m: f64, p: &ChannelParams) -> f64 {
    let w = p.street_width_m;
    let h = p.building_height_m;
    let hbs = p.bs_height_m;
    let hut = p.ut_height_m;
    161.04 - 7.1 * w.log10() + 7.5 * h.log10()
        - (24.37 - 3.7 * (h / hbs).powi(2)) * hbs.log10()
        + (43.42 - 3.1 * hbs.log10()) * (d_m.log10() - 3.0)
        + 20.0 * p.carrier_ghz.log10()
        - (3.2 * (11.75 * hut).log10().powi(2) - 4.97)
}

/// Urban-micro NLOS path loss in dB, `d` in meters, valid for 10 m < d < 2 km.
pub fn umi_nlos_db(d_m: f64, p: &ChannelParams) -> f64 {
    36.7 * d_m.log10() + 22.7 + 26.0 * p.carrier_ghz.log10()
}

pub fn path_loss_db(bs: &BaseStation, loc: &LocationCell, params: &ChannelParams) -> PathLoss {
    let d = bs.distance_to(loc.x_m, loc.y_m);
    path_loss_at(bs.kind, d, params)
}

pub fn path_loss_at(kind: BsKind, distance_m: f64, params: &ChannelParams) -> PathLoss {
    let clamped = distance_m < params.min_distance_m;
    let d = distance_m.max(params.min_distance_m);
    let db = match kind {
        BsKind::Macro => uma_nlos_db(d, params),
        BsKind::Micro => umi_nlos_db(d, params),
    };
    PathLoss { db, clamped }
}

/// Linear SNR of a link with the given path loss.
pub fn snr(path_loss_db: f64, tx_power_w: f64, noise_w: f64) -> f64 {
    let gain = 10f64.powf(-path_loss_db / 10.0);
    gain * tx_power_w / noise_w
}

/// Shannon rate in bit/s of a link with linear SNR `gamma`.
pub fn shannon_rate(bandwidth_hz: f64, gamma: f64) -> f64 {
    bandwidth_hz * (1.0 + gamma).log2()
}

pub fn service_rate(bs: &BaseStation, loc: &LocationCell, scenario: &Scenario) -> f64 {
    let pl = path_loss_db(bs, loc, &scenario.channel);
    shannon_rate(scenario.bandwidth_hz, snr(pl.db, bs.tx_power_w, scenario.noise_watts()))
}

/// `S[i][j]` in bit/s for every (base station, location) pair. Unreachable pairs hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceRateMatrix {
    num_bs: usize,
    num_locations: usize,
    rates: Vec<f64>,
    /// Per location, reachable base stations from best to worst rate.
    ranked: Vec<Vec<usize>>,
}

impl ServiceRateMatrix {
    /// Builds a matrix from `rates[i * num_locations + j]`.
    pub fn from_rates(num_bs: usize, num_locations: usize, rates: Vec<f64>) -> Result<Self> {
        if rates.len() != num_bs * num_locations {
            return Err(Error::Data(format!(
                "rate matrix has {} entries, expected {num_bs} x {num_locations}",
                rates.len()
            )));
        }
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::Data("service rates must be finite and nonnegative".into()));
        }
        let ranked = (0..num_locations)
            .map(|j| {
                let mut order: Vec<usize> = (0..num_bs).filter(|&i| rates[i * num_locations + j] > 0.0).collect();
                // Stable sort: equal rates keep ascending id order.
                order.sort_by(|&a, &b| {
                    rates[b * num_locations + j].total_cmp(&rates[a * num_locations + j])
                });
                order
            })
            .collect();
        Ok(ServiceRateMatrix {
            num_bs,
            num_locations,
            rates,
            ranked,
        })
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn num_locations(&self) -> usize {
        self.num_locations
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[i * self.num_locations + j]
    }

    /// Load weight `U_j / S_ij` for demand in Mbit/s; infinite if unreachable.
    pub fn weight(&self, i: usize, j: usize, demand_mbps: f64) -> f64 {
        let s = self.rate(i, j);
        if s > 0.0 {
            demand_mbps * 1.0e6 / s
        } else {
            f64::INFINITY
        }
    }

    /// Reachable base stations of location `j`, best rate (lowest weight) first.
    pub fn ranked(&self, j: usize) -> &[usize] {
        &self.ranked[j]
    }

    pub fn uncovered_locations(&self) -> Vec<usize> {
        (0..self.num_locations).filter(|&j| self.ranked[j].is_empty()).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bs_id", "location_id", "rate_bps"])?;
        for i in 0..self.num_bs {
            for j in 0..self.num_locations {
                w.write_record([i.to_string(), j.to_string(), self.rate(i, j).to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<rate csv>", e))?;
        Ok(())
    }
}

/// Service rates of every pair; links below the scenario's SNR cutoff are zeroed.
pub fn build_service_matrix(scenario: &Scenario) -> ServiceRateMatrix {
    let noise = scenario.noise_watts();
    let min_snr = 10f64.powf(scenario.channel.min_snr_db / 10.0);
    let n = scenario.num_locations();
    let mut rates = Vec::with_capacity(scenario.num_bs() * n);
    for bs in &scenario.base_stations {
        for loc in &scenario.locations {
            let pl = path_loss_db(bs, loc, &scenario.channel);
            let gamma = snr(pl.db, bs.tx_power_w, noise);
            rates.push(if gamma >= min_snr {
                shannon_rate(scenario.bandwidth_hz, gamma)
            } else {
                0.0
            });
        }
    }
    ServiceRateMatrix::from_rates(scenario.num_bs(), n, rates).expect("rates are finite by construction")
}
