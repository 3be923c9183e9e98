use serde::{Deserialize, Serialize};

use super::{assign_restricted, initial_assignment, schedule_interval, sort_key, Assignment, Policy};
use crate::channel::ServiceRateMatrix;
use crate::energy::{settle_interval, BatteryState, EnergyLedger, GenerationProfile, IntervalRecord};
use crate::error::{Error, Result};
use crate::model::{Scenario, HOURS_PER_DAY};
use crate::traffic::TrafficGrid;

/// Everything a day of operation reads but never changes.
#[derive(Debug, Clone, Copy)]
pub struct DayContext<'a> {
    pub scenario: &'a Scenario,
    pub grid: &'a TrafficGrid,
    pub matrix: &'a ServiceRateMatrix,
    pub generation: &'a GenerationProfile,
    /// Panel size per base station, kW.
    pub panels: &'a [u32],
    pub policy: Policy,
    /// Empty every battery at the start of the day.
    pub daily_reset: bool,
    pub record_decisions: bool,
    pub keep_assignments: bool,
}

/// One line of the per-interval decision log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub t: usize,
    pub bs_id: usize,
    pub x: bool,
    pub load: f64,
    pub key: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DayOutcome {
    /// Final per-interval assignments, present when requested.
    pub assignments: Vec<Assignment>,
    /// On/off decisions per interval, always kept.
    pub on: Vec<Vec<bool>>,
    /// True if any interval needed repair against actual demand.
    pub repaired: bool,
    pub repaired_intervals: usize,
    /// Constraint violations of the final schedules on actual demand.
    pub violations: usize,
    pub decisions: Vec<DecisionRow>,
}

/// Runs the 24 intervals of `day`, deciding on forecast demand and settling energy on actuals.
///
/// `batteries` carries the state into the next day.
pub fn run_day(
    ctx: &DayContext<'_>,
    batteries: &mut [BatteryState],
    day: usize,
    ledger: &mut EnergyLedger,
) -> Result<DayOutcome> {
    let scenario = ctx.scenario;
    let rho = scenario.rho;
    let n = scenario.num_bs();
    let mut out = DayOutcome::default();
    if ctx.daily_reset {
        for b in batteries.iter_mut() {
            b.stored_kwh = 0.0;
        }
    }

    let mut records: Vec<IntervalRecord> = Vec::with_capacity(n);
    for h in 0..HOURS_PER_DAY {
        let t = day * HOURS_PER_DAY + h;
        let forecast = ctx.grid.forecast(t);
        let actual = ctx.grid.actual(t);
        let stored: Vec<f64> = batteries.iter().map(|b| b.stored_kwh).collect();

        let planned = match initial_assignment(ctx.matrix, forecast, rho) {
            Ok(a) => Some(schedule_interval(a, forecast, ctx.matrix, &stored, &ctx.policy, rho)),
            Err(Error::Infeasible { .. }) => None,
            Err(e) => return Err(e),
        };
        let (mut a, repaired) = match planned {
            Some(mut a) if a.check(actual, ctx.matrix, rho).is_empty() => {
                a.recompute_loads(actual, ctx.matrix);
                (a, false)
            }
            Some(a) => (repair(a.on(), actual, ctx.matrix, &stored, &ctx.policy, rho, t)?, true),
            None => (repair(&vec![false; n], actual, ctx.matrix, &stored, &ctx.policy, rho, t)?, true),
        };
        a.recompute_loads(actual, ctx.matrix);
        if repaired {
            out.repaired = true;
            out.repaired_intervals += 1;
        }
        out.violations += a.check(actual, ctx.matrix, rho).len();

        records.clear();
        let openings = stored.clone();
        let g = ctx.generation.at(t);
        for (i, bs) in scenario.base_stations.iter().enumerate() {
            let (next, rec) = settle_interval(batteries[i], ctx.panels[i] as f64, g, bs.energy_kwh, a.is_on(i))?;
            batteries[i] = next;
            records.push(rec);
        }
        ledger.push_interval(&openings, &records);

        if ctx.record_decisions {
            out.decisions.extend((0..n).map(|i| DecisionRow {
                t,
                bs_id: i,
                x: a.is_on(i),
                load: a.loads()[i],
                key: sort_key(&ctx.policy, stored[i], a.loads()[i]),
            }));
        }
        out.on.push(a.on().to_vec());
        if ctx.keep_assignments {
            out.assignments.push(a);
        }
    }
    Ok(out)
}

/// Restores feasibility on actual demand.
///
/// First refits the locations onto the stations already on; failing that,
/// switched-off stations come back one at a time in descending key order.
fn repair(
    on: &[bool],
    actual: &[f64],
    matrix: &ServiceRateMatrix,
    stored: &[f64],
    policy: &Policy,
    rho: f64,
    t: usize,
) -> Result<Assignment> {
    let mut available = on.to_vec();
    let mut last_failure = match assign_restricted(&available, actual, matrix, rho) {
        Ok(a) => return Ok(a),
        Err(j) => j,
    };
    let mut off: Vec<usize> = (0..on.len()).filter(|&i| !on[i]).collect();
    let key = |i: usize| sort_key(policy, stored[i], 0.0);
    off.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
    for i in off {
        available[i] = true;
        match assign_restricted(&available, actual, matrix, rho) {
            Ok(a) => return Ok(a),
            Err(j) => last_failure = j,
        }
    }
    Err(Error::Infeasible {
        location: last_failure,
        interval: Some(t),
    })
}
