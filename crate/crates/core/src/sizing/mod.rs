//! Year-long simulation under a fixed panel/battery plan, and the
//! incremental search over plans.

mod search;

use serde::{Deserialize, Serialize};

use crate::channel::{build_service_matrix, ServiceRateMatrix};
use crate::energy::{tco, BatteryState, BsTotals, EnergyLedger, GenerationProfile, TcoBreakdown};
use crate::error::{Error, Result};
use crate::model::Scenario;
use crate::scheduler::{run_day, Assignment, DayContext, DecisionRow, Policy, PolicyKind};
use crate::traffic::{build_demand_grid, TrafficGrid};

pub use search::{isb_step, issp_step, sizing_loop, PaybackInputs, SizingOutcome, SizingRecord, MIN_PANEL_DISTANCE_M};

/// Panel kW and battery units per base station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingPlan {
    pub panels: Vec<u32>,
    pub batteries: Vec<u32>,
    /// Cost of the run that evaluated this plan, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tco: Option<TcoBreakdown>,
}

impl SizingPlan {
    pub fn uniform(num_bs: usize, panel_kw: u32, battery_units: u32) -> Self {
        SizingPlan {
            panels: vec![panel_kw; num_bs],
            batteries: vec![battery_units; num_bs],
            tco: None,
        }
    }

    /// The grid-only system.
    pub fn zero(num_bs: usize) -> Self {
        Self::uniform(num_bs, 0, 0)
    }

    pub fn total_panels(&self) -> u32 {
        self.panels.iter().sum()
    }

    pub fn total_batteries(&self) -> u32 {
        self.batteries.iter().sum()
    }

    pub fn within_caps(&self, panel_max: u32, battery_max: u32) -> bool {
        self.panels.iter().all(|&s| s <= panel_max) && self.batteries.iter().all(|&b| b <= battery_max)
    }
}

/// A scenario with its demand, service rates and generation materialized.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub scenario: Scenario,
    pub grid: TrafficGrid,
    pub matrix: ServiceRateMatrix,
    pub generation: GenerationProfile,
}

impl Simulation {
    /// Validates the scenario and derives everything it implies.
    pub fn new(scenario: Scenario) -> Result<Self> {
        let scenario = scenario.validated()?;
        let grid = build_demand_grid(&scenario);
        let matrix = build_service_matrix(&scenario);
        let generation = GenerationProfile::for_scenario(&scenario.solar, &scenario.time)?;
        Self::from_parts(scenario, grid, matrix, generation)
    }

    pub fn from_parts(
        scenario: Scenario,
        grid: TrafficGrid,
        matrix: ServiceRateMatrix,
        generation: GenerationProfile,
    ) -> Result<Self> {
        let horizon = scenario.time.horizon;
        if grid.horizon() != horizon || generation.len() != horizon {
            return Err(Error::Data(format!(
                "horizon mismatch: scenario {horizon}, demand {}, generation {}",
                grid.horizon(),
                generation.len()
            )));
        }
        if matrix.num_bs() != scenario.num_bs() || matrix.num_locations() != scenario.num_locations() {
            return Err(Error::Data("service matrix shape does not match the scenario".into()));
        }
        if let Some(&location) = matrix.uncovered_locations().first() {
            return Err(Error::Infeasible {
                location,
                interval: None,
            });
        }
        Ok(Simulation {
            scenario,
            grid,
            matrix,
            generation,
        })
    }

    /// The policy of `kind` with the scenario's weight and sorting flag.
    pub fn policy(&self, kind: PolicyKind) -> Policy {
        let mut p = Policy::new(kind, self.scenario.alpha);
        p.sort_once = self.scenario.scheduler.hybrid_sort_once;
        p
    }

    pub fn days(&self) -> usize {
        self.scenario.time.days()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Empty the batteries at every day boundary.
    pub daily_reset: bool,
    pub record_decisions: bool,
    /// Keep every interval's final assignment in the result.
    pub keep_assignments: bool,
}

/// Outcome of simulating the whole horizon under one plan and policy.
#[derive(Debug, Clone, PartialEq)]
pub struct YearLedger {
    pub ledger: EnergyLedger,
    /// Horizon totals per base station.
    pub totals: Vec<BsTotals>,
    pub tco: TcoBreakdown,
    /// Share of base stations on, per simulated day.
    pub daily_on_ratio: Vec<f64>,
    /// Share of base stations on per calendar month; `None` for months not simulated.
    pub monthly_on_ratio: [Option<f64>; 12],
    /// Unstored energy per calendar month, summed over base stations, kWh.
    pub unstored_by_month: [f64; 12],
    pub repaired_intervals: usize,
    pub violations: usize,
    pub decisions: Vec<DecisionRow>,
    /// Per-interval assignments when [`RunOptions::keep_assignments`] is set.
    pub assignments: Vec<Assignment>,
}

impl YearLedger {
    pub fn horizon(&self) -> usize {
        self.ledger.horizon()
    }

    /// Totals divided by the number of simulated intervals.
    pub fn per_interval(&self) -> Vec<BsTotals> {
        let h = self.horizon().max(1) as f64;
        self.totals
            .iter()
            .map(|t| BsTotals {
                texp: t.texp / h,
                gexp: t.gexp / h,
                unstrd: t.unstrd / h,
                harvested: t.harvested / h,
                renewable: t.renewable / h,
                on_intervals: t.on_intervals,
            })
            .collect()
    }
}

/// Runs every day of the horizon in order, carrying battery charge across days.
///
/// Batteries start empty.
pub fn run_year(sim: &Simulation, plan: &SizingPlan, policy: Policy) -> Result<YearLedger> {
    run_year_with(sim, plan, policy, RunOptions::default())
}

pub fn run_year_with(sim: &Simulation, plan: &SizingPlan, policy: Policy, opts: RunOptions) -> Result<YearLedger> {
    let scenario = &sim.scenario;
    let n = scenario.num_bs();
    if plan.panels.len() != n || plan.batteries.len() != n {
        return Err(Error::Contract(format!(
            "plan covers {} panels and {} batteries for {n} base stations",
            plan.panels.len(),
            plan.batteries.len()
        )));
    }
    let unit = scenario.costs.battery_unit_kwh;
    let mut batteries: Vec<BatteryState> =
        plan.batteries.iter().map(|&b| BatteryState::empty(b as f64 * unit)).collect();
    let mut ledger = EnergyLedger::new(vec![0.0; n]);
    let ctx = DayContext {
        scenario,
        grid: &sim.grid,
        matrix: &sim.matrix,
        generation: &sim.generation,
        panels: &plan.panels,
        policy,
        daily_reset: opts.daily_reset,
        record_decisions: opts.record_decisions,
        keep_assignments: opts.keep_assignments,
    };

    let mut daily_on_ratio = Vec::with_capacity(sim.days());
    let mut month_on = [0usize; 12];
    let mut month_slots = [0usize; 12];
    let mut repaired_intervals = 0;
    let mut violations = 0;
    let mut decisions = Vec::new();
    let mut assignments = Vec::new();
    for day in 0..sim.days() {
        let out = run_day(&ctx, &mut batteries, day, &mut ledger)?;
        let on: usize = out.on.iter().map(|x| x.iter().filter(|&&b| b).count()).sum();
        let slots = out.on.len() * n;
        daily_on_ratio.push(on as f64 / slots as f64);
        let month = scenario.time.calendar[day].month();
        month_on[month] += on;
        month_slots[month] += slots;
        repaired_intervals += out.repaired_intervals;
        violations += out.violations;
        decisions.extend(out.decisions);
        assignments.extend(out.assignments);
    }

    let mut unstored_by_month = [0.0; 12];
    for t in 0..ledger.horizon() {
        let month = scenario.time.calendar[scenario.time.day_of(t)].month();
        unstored_by_month[month] += ledger.interval(t).iter().map(|r| r.unstored).sum::<f64>();
    }
    let monthly_on_ratio = std::array::from_fn(|m| (month_slots[m] > 0).then(|| month_on[m] as f64 / month_slots[m] as f64));
    let cost = tco(&ledger, plan, &scenario.costs);
    Ok(YearLedger {
        totals: ledger.totals(),
        ledger,
        tco: cost,
        daily_on_ratio,
        monthly_on_ratio,
        unstored_by_month,
        repaired_intervals,
        violations,
        decisions,
        assignments,
    })
}
