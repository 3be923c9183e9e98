//! Total cost of ownership: panel and battery capex plus amortized grid opex.

use serde::{Deserialize, Serialize};

use super::EnergyLedger;
use crate::model::{CostParameters, HOURS_PER_YEAR};
use crate::sizing::SizingPlan;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TcoBreakdown {
    pub capex_panels: f64,
    pub capex_batteries: f64,
    pub opex_grid: f64,
    /// Objective value: capex plus opex.
    pub total: f64,
    /// Constants outside the objective (maintenance, deep sleep), reporting only.
    pub extras: f64,
}

impl TcoBreakdown {
    pub fn capex(&self) -> f64 {
        self.capex_panels + self.capex_batteries
    }

    pub fn reported_total(&self) -> f64 {
        self.total + self.extras
    }
}

/// Multiplier turning the grid energy of a `horizon`-interval run into
/// lifetime opex: amortization years times the simulated share of a year.
pub fn opex_scale(horizon: usize, costs: &CostParameters) -> f64 {
    costs.amortization_years * HOURS_PER_YEAR as f64 / horizon as f64
}

/// Grid cost of one base station in one interval, unscaled.
pub fn interval_grid_cost(costs: &CostParameters, energy_kwh: f64, ratio: f64, on: bool) -> f64 {
    if on {
        costs.effective_grid_price() * energy_kwh * (1.0 - ratio)
    } else {
        0.0
    }
}

pub fn capex(plan: &SizingPlan, costs: &CostParameters) -> (f64, f64) {
    let panels = plan.panels.iter().map(|&s| costs.panel_usd_per_kw * s as f64).sum();
    let batteries = plan.batteries.iter().map(|&b| costs.battery_usd_per_unit * b as f64).sum();
    (panels, batteries)
}

pub fn tco(ledger: &EnergyLedger, plan: &SizingPlan, costs: &CostParameters) -> TcoBreakdown {
    let (capex_panels, capex_batteries) = capex(plan, costs);
    let horizon = ledger.horizon().max(1);
    let scale = opex_scale(horizon, costs);
    let opex_grid = costs.effective_grid_price() * ledger.total_grid_kwh() * scale;
    let sleeping = ledger.records().iter().filter(|r| !r.on).count() as f64;
    let extras = costs.maintenance_usd + costs.sleep_kwh * sleeping * costs.grid_usd_per_kwh * scale;
    TcoBreakdown {
        capex_panels,
        capex_batteries,
        opex_grid,
        total: capex_panels + capex_batteries + opex_grid,
        extras,
    }
}
