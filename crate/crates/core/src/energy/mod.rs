//! Battery recursion, renewable-ratio rule and per-interval energy bookkeeping.

pub mod cost;
pub mod solar;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cost::{interval_grid_cost, opex_scale, tco, TcoBreakdown};
pub use solar::{City, GenerationProfile, SolarSite};

/// Slack for the draw-versus-availability precondition.
const DRAW_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub stored_kwh: f64,
    pub capacity_kwh: f64,
}

impl BatteryState {
    pub fn empty(capacity_kwh: f64) -> Self {
        BatteryState {
            stored_kwh: 0.0,
            capacity_kwh,
        }
    }
}

/// Advances one interval: harvest `panel_kw * g_t`, spend `draw_kwh`, clip to capacity.
///
/// Returns the new state and the harvested energy that did not fit.
pub fn battery_step(state: BatteryState, panel_kw: f64, g_t: f64, draw_kwh: f64) -> Result<(BatteryState, f64)> {
    let available = state.stored_kwh + panel_kw * g_t;
    if draw_kwh > available + DRAW_EPS || draw_kwh < 0.0 {
        return Err(Error::Contract(format!(
            "renewable draw {draw_kwh} kWh exceeds available {available} kWh"
        )));
    }
    let remaining = available - draw_kwh;
    let stored = remaining.max(0.0).min(state.capacity_kwh);
    let unstored = (remaining - state.capacity_kwh).max(0.0);
    Ok((
        BatteryState {
            stored_kwh: stored,
            capacity_kwh: state.capacity_kwh,
        },
        unstored,
    ))
}

/// Share of the interval's consumption covered by stored plus harvested energy.
pub fn renewable_ratio(stored_kwh: f64, harvest_kwh: f64, energy_kwh: f64, on: bool) -> Result<f64> {
    if !(energy_kwh > 0.0) {
        return Err(Error::Contract(format!("base station consumption must be positive, got {energy_kwh}")));
    }
    if !on {
        return Ok(0.0);
    }
    Ok(((stored_kwh + harvest_kwh) / energy_kwh).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub on: bool,
    pub harvested: f64,
    /// Battery content at the end of the interval.
    pub stored: f64,
    pub ratio: f64,
    pub renewable_kwh: f64,
    pub grid_kwh: f64,
    pub unstored: f64,
}

/// Annual aggregates of one base station.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BsTotals {
    /// Total consumption while on, kWh.
    pub texp: f64,
    /// Grid consumption, kWh.
    pub gexp: f64,
    /// Harvest lost to a full battery, kWh.
    pub unstrd: f64,
    pub harvested: f64,
    pub renewable: f64,
    pub on_intervals: usize,
}

/// Per-BS per-interval energy record, interval-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    num_bs: usize,
    records: Vec<IntervalRecord>,
    initial_stored: Vec<f64>,
    /// Stored energy at the start of each interval, after any daily reset.
    opening: Vec<f64>,
}

impl EnergyLedger {
    pub fn new(initial_stored: Vec<f64>) -> Self {
        EnergyLedger {
            num_bs: initial_stored.len(),
            records: Vec::new(),
            initial_stored,
            opening: Vec::new(),
        }
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn horizon(&self) -> usize {
        if self.num_bs == 0 {
            0
        } else {
            self.records.len() / self.num_bs
        }
    }

    /// Appends one interval; `openings[i]` is the stored energy the interval starts from.
    pub fn push_interval(&mut self, openings: &[f64], records: &[IntervalRecord]) {
        assert_eq!(records.len(), self.num_bs);
        assert_eq!(openings.len(), self.num_bs);
        self.opening.extend_from_slice(openings);
        self.records.extend_from_slice(records);
    }

    pub fn interval(&self, t: usize) -> &[IntervalRecord] {
        &self.records[t * self.num_bs..(t + 1) * self.num_bs]
    }

    pub fn record(&self, i: usize, t: usize) -> &IntervalRecord {
        &self.records[t * self.num_bs + i]
    }

    pub fn opening(&self, i: usize, t: usize) -> f64 {
        self.opening[t * self.num_bs + i]
    }

    pub fn initial_stored(&self) -> &[f64] {
        &self.initial_stored
    }

    pub fn records(&self) -> &[IntervalRecord] {
        &self.records
    }

    pub fn totals(&self) -> Vec<BsTotals> {
        let mut out = vec![BsTotals::default(); self.num_bs];
        for row in self.records.chunks(self.num_bs) {
            for (acc, r) in out.iter_mut().zip(row) {
                if r.on {
                    acc.texp += r.renewable_kwh + r.grid_kwh;
                    acc.on_intervals += 1;
                }
                acc.gexp += r.grid_kwh;
                acc.unstrd += r.unstored;
                acc.harvested += r.harvested;
                acc.renewable += r.renewable_kwh;
            }
        }
        out
    }

    pub fn total_grid_kwh(&self) -> f64 {
        self.records.iter().map(|r| r.grid_kwh).sum()
    }

    /// Largest per-interval residual of `harvest + opening = renewable + unstored + stored`.
    pub fn max_conservation_residual(&self) -> f64 {
        self.records
            .iter()
            .zip(&self.opening)
            .map(|(r, &open)| (r.harvested + open - r.renewable_kwh - r.unstored - r.stored).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bs_id", "t", "harvested", "stored", "r", "grid_kwh", "unstored"])?;
        for (k, r) in self.records.iter().enumerate() {
            let (t, i) = (k / self.num_bs, k % self.num_bs);
            w.write_record([
                i.to_string(),
                t.to_string(),
                r.harvested.to_string(),
                r.stored.to_string(),
                r.ratio.to_string(),
                r.grid_kwh.to_string(),
                r.unstored.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<ledger csv>", e))?;
        Ok(())
    }
}

/// Energy flows of one base station over one interval given its on/off decision.
pub fn settle_interval(
    battery: BatteryState,
    panel_kw: f64,
    g_t: f64,
    energy_kwh: f64,
    on: bool,
) -> Result<(BatteryState, IntervalRecord)> {
    let harvested = panel_kw * g_t;
    let ratio = renewable_ratio(battery.stored_kwh, harvested, energy_kwh, on)?;
    let draw = if on { energy_kwh * ratio } else { 0.0 };
    // Rounding in ratio * energy can exceed availability by an ulp.
    let draw = draw.min(battery.stored_kwh + harvested);
    let (next, unstored) = battery_step(battery, panel_kw, g_t, draw)?;
    let grid = if on { energy_kwh - draw } else { 0.0 };
    Ok((
        next,
        IntervalRecord {
            on,
            harvested,
            stored: next.stored_kwh,
            ratio,
            renewable_kwh: draw,
            grid_kwh: grid,
            unstored,
        },
    ))
}
