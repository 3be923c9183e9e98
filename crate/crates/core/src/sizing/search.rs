use serde::{Deserialize, Serialize};

use super::{run_year, Simulation, SizingPlan, YearLedger};
use crate::energy::{BsTotals, TcoBreakdown};
use crate::error::{Error, Result};
use crate::model::{BaseStation, CostParameters, HOURS_PER_YEAR};
use crate::scheduler::Policy;

/// Panels are not grown at two stations closer than this in one step.
pub const MIN_PANEL_DISTANCE_M: f64 = 600.0;

/// Relative slack before a TCO counts as worse than the previous one.
const WORSE_EPS: f64 = 1e-6;

/// Prices and horizon used to decide whether an increment pays for itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaybackInputs {
    pub grid_usd_per_kwh: f64,
    pub panel_usd_per_kw: f64,
    pub battery_usd_per_unit: f64,
    pub amortization_years: f64,
    /// Intervals per year that a per-interval potential is multiplied by.
    pub intervals_per_year: f64,
}

impl PaybackInputs {
    pub fn from_costs(costs: &CostParameters) -> Self {
        PaybackInputs {
            grid_usd_per_kwh: costs.effective_grid_price(),
            panel_usd_per_kw: costs.panel_usd_per_kw,
            battery_usd_per_unit: costs.battery_usd_per_unit,
            amortization_years: costs.amortization_years,
            intervals_per_year: HOURS_PER_YEAR as f64,
        }
    }

    fn lifetime_value(&self, pot_kwh: f64) -> f64 {
        pot_kwh * self.grid_usd_per_kwh * self.intervals_per_year * self.amortization_years
    }
}

fn max_count(num_bs: usize, itrt: usize) -> usize {
    (num_bs / 2).saturating_sub(4 * itrt)
}

/// Indices sorted by descending potential, ties by id, truncated to the
/// iteration's budget and cut at the first increment that does not pay back.
fn payback_list(pot: &[(usize, f64)], limit: usize, price: f64, pay: &PaybackInputs) -> Vec<usize> {
    let mut ranked = pot.to_vec();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
        .into_iter()
        .take(limit)
        .take_while(|&(_, p)| pay.lifetime_value(p) > price)
        .map(|(i, _)| i)
        .collect()
}

/// One panel increment step.
///
/// `per_interval` holds the evaluation run's averages per interval. Stations
/// already at `cap` are not ranked.
pub fn issp_step(
    itrt: usize,
    per_interval: &[BsTotals],
    panels: &[u32],
    stations: &[BaseStation],
    cap: u32,
    pay: &PaybackInputs,
) -> Vec<u32> {
    let pot: Vec<(usize, f64)> = per_interval
        .iter()
        .enumerate()
        .filter(|&(i, _)| panels[i] < cap)
        .map(|(i, t)| (i, (t.texp / panels[i].max(1) as f64).min(t.gexp)))
        .collect();
    let mut pending = payback_list(&pot, max_count(panels.len(), itrt), pay.panel_usd_per_kw, pay);
    let mut accepted: Vec<usize> = Vec::new();
    while !pending.is_empty() {
        let head = pending[0];
        accepted.push(head);
        let (hx, hy) = (stations[head].x_m, stations[head].y_m);
        pending.retain(|&i| stations[i].distance_to(hx, hy) >= MIN_PANEL_DISTANCE_M);
    }
    let mut next = panels.to_vec();
    for i in accepted {
        next[i] = (next[i] + 1).min(cap);
    }
    next
}

/// One battery increment step, driven by spilled harvest.
pub fn isb_step(itrt: usize, per_interval: &[BsTotals], batteries: &[u32], cap: u32, pay: &PaybackInputs) -> Vec<u32> {
    let pot: Vec<(usize, f64)> = per_interval
        .iter()
        .enumerate()
        .filter(|&(i, _)| batteries[i] < cap)
        .map(|(i, t)| (i, t.unstrd.min(t.gexp)))
        .collect();
    let mut next = batteries.to_vec();
    for i in payback_list(&pot, max_count(batteries.len(), itrt), pay.battery_usd_per_unit, pay) {
        next[i] = (next[i] + 1).min(cap);
    }
    next
}

/// One evaluated configuration of the sizing loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingRecord {
    pub iteration: usize,
    /// Phase in effect when this configuration was evaluated.
    pub step: usize,
    pub plan: SizingPlan,
    pub tco: TcoBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizingOutcome {
    pub best: SizingPlan,
    pub best_index: usize,
    pub history: Vec<SizingRecord>,
}

impl SizingOutcome {
    pub fn best_record(&self) -> &SizingRecord {
        &self.history[self.best_index]
    }
}

/// Alternating panel and battery growth from one unit everywhere.
///
/// Each iteration evaluates the current plan over the whole horizon. Two
/// worsening iterations in a row, or a step that changes nothing, move to
/// the next phase; phases run panels, batteries, panels, batteries. The best
/// evaluated plan is returned.
pub fn sizing_loop(sim: &Simulation, policy: Policy) -> Result<SizingOutcome> {
    sizing_loop_traced(sim, policy, |_, _| {})
}

/// [`sizing_loop`] with a callback receiving each evaluated record and its ledger.
pub fn sizing_loop_traced(
    sim: &Simulation,
    policy: Policy,
    mut observe: impl FnMut(&SizingRecord, &YearLedger),
) -> Result<SizingOutcome> {
    let sc = &sim.scenario;
    let n = sc.num_bs();
    let pay = PaybackInputs::from_costs(&sc.costs);
    let (panel_cap, battery_cap) = (sc.panel_size_max, sc.battery_size_max);
    let mut plan = SizingPlan::uniform(n, 1.min(panel_cap), 1.min(battery_cap));
    let mut history: Vec<SizingRecord> = Vec::new();
    let mut prev_tco = f64::INFINITY;
    let (mut step, mut fail) = (0usize, 0usize);
    // Every accepted step adds at least one unit, so this bounds the loop.
    let max_iterations = n * (panel_cap + battery_cap) as usize + 8;

    let mut itrt = 0;
    'outer: while step <= 3 {
        if itrt > max_iterations {
            return Err(Error::Contract("sizing loop did not terminate".into()));
        }
        let year = run_year(sim, &plan, policy)?;
        let total = year.tco.total;
        if total > prev_tco * (1.0 + WORSE_EPS) {
            fail += 1;
            if fail >= 2 {
                fail = 0;
                step += 1;
            }
        } else {
            fail = 0;
        }
        prev_tco = total;
        let mut evaluated = plan.clone();
        evaluated.tco = Some(year.tco);
        let record = SizingRecord {
            iteration: itrt,
            step,
            plan: evaluated,
            tco: year.tco,
        };
        observe(&record, &year);
        history.push(record);

        let averages = year.per_interval();
        loop {
            if step > 3 {
                break 'outer;
            }
            if step % 2 == 0 {
                let next = issp_step(itrt, &averages, &plan.panels, &sc.base_stations, panel_cap, &pay);
                if next == plan.panels {
                    step += 1;
                } else {
                    plan.panels = next;
                    break;
                }
            } else {
                let next = isb_step(itrt, &averages, &plan.batteries, battery_cap, &pay);
                if next == plan.batteries {
                    step += 1;
                } else {
                    plan.batteries = next;
                    break;
                }
            }
        }
        itrt += 1;
    }

    let best_index = history
        .iter()
        .enumerate()
        .fold(0, |best, (k, r)| if r.tco.total < history[best].tco.total { k } else { best });
    Ok(SizingOutcome {
        best: history[best_index].plan.clone(),
        best_index,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BsKind;

    fn pay() -> PaybackInputs {
        PaybackInputs::from_costs(&CostParameters::default())
    }

    fn totals(texp: f64, gexp: f64, unstrd: f64) -> BsTotals {
        BsTotals {
            texp,
            gexp,
            unstrd,
            ..BsTotals::default()
        }
    }

    fn far_apart(n: usize) -> Vec<BaseStation> {
        (0..n).map(|i| BaseStation::new(i, BsKind::Macro, 1000.0 * i as f64, 0.0)).collect()
    }

    #[test]
    fn payback_arithmetic() {
        let p = pay();
        assert!((p.lifetime_value(0.1) - 2102.4).abs() < 1e-9);
        assert!((p.lifetime_value(0.01) - 210.24).abs() < 1e-9);
        assert!((p.lifetime_value(0.05) - 1051.2).abs() < 1e-9);
    }

    #[test]
    fn issp_increments_only_paying_stations() {
        let st = far_apart(4);
        let avg = [totals(0.1, 0.1, 0.0), totals(0.01, 0.01, 0.0), totals(1.0, 0.5, 0.0), totals(0.0, 0.0, 0.0)];
        let next = issp_step(0, &avg, &[1, 1, 1, 1], &st, 6, &pay());
        // Budget is |I|/2 = 2: stations 2 then 0.
        assert_eq!(next, vec![2, 1, 2, 1]);
    }

    #[test]
    fn issp_divides_total_by_panel_size() {
        let st = far_apart(2);
        // 0.2 / 4 = 0.05 -> 1051 > 1000; 0.2 / 5 = 0.04 -> 841 < 1000.
        let avg = [totals(0.2, 1.0, 0.0), totals(0.2, 1.0, 0.0)];
        assert_eq!(issp_step(0, &avg, &[4, 5], &st, 6, &pay()), vec![5, 5]);
    }

    #[test]
    fn issp_skips_close_neighbours() {
        let st = vec![
            BaseStation::new(0, BsKind::Macro, 0.0, 0.0),
            BaseStation::new(1, BsKind::Macro, 300.0, 0.0),
            BaseStation::new(2, BsKind::Macro, 2000.0, 0.0),
            BaseStation::new(3, BsKind::Macro, 4000.0, 0.0),
        ];
        let avg = [totals(1.0, 0.5, 0.0), totals(1.0, 0.8, 0.0), totals(0.0, 0.0, 0.0), totals(0.0, 0.0, 0.0)];
        assert_eq!(issp_step(0, &avg, &[1; 4], &st, 6, &pay()), vec![1, 2, 1, 1]);
    }

    #[test]
    fn budget_shrinks_with_iterations() {
        let st = far_apart(10);
        let avg = vec![totals(1.0, 1.0, 1.0); 10];
        assert_eq!(issp_step(0, &avg, &[1; 10], &st, 6, &pay()).iter().sum::<u32>(), 15);
        assert_eq!(issp_step(1, &avg, &[1; 10], &st, 6, &pay()).iter().sum::<u32>(), 11);
        assert_eq!(issp_step(2, &avg, &[1; 10], &st, 6, &pay()), vec![1; 10]);
        assert_eq!(isb_step(7, &avg, &[1; 10], 8, &pay()), vec![1; 10]);
    }

    #[test]
    fn isb_examples() {
        let avg = [totals(1.0, 100.0, 0.0), totals(1.0, 1.0, 0.05), totals(1.0, 1.0, 1.0), totals(1.0, 1.0, 1.0)];
        let next = isb_step(0, &avg, &[1, 1, 8, 1], 8, &pay());
        // Station 2 is capped and not ranked; 3 and 1 share the budget of 2.
        assert_eq!(next, vec![1, 2, 8, 2]);
    }

    #[test]
    fn caps_hold() {
        let st = far_apart(2);
        let avg = vec![totals(9.0, 9.0, 9.0); 2];
        assert_eq!(issp_step(0, &avg, &[6, 6], &st, 6, &pay()), vec![6, 6]);
        assert_eq!(isb_step(0, &avg, &[8, 8], 8, &pay()), vec![8, 8]);
    }
}
