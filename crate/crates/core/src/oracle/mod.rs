//! Exhaustive ground truth for small instances, and export of the
//! daily-reset mixed-integer model.

mod reduced;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ServiceRateMatrix;
use crate::energy::{renewable_ratio, TcoBreakdown};
use crate::error::{Error, Result};
use crate::model::{Area, BaseStation, BsKind, LocationCell, Scenario, SolarConfig, TimeGrid};
use crate::scheduler::{initial_assignment, Policy, LOAD_EPS};
use crate::sizing::{run_year, Simulation, SizingPlan};

pub use reduced::{export_reduced_model, reduced_simulation, LpVar};

/// Most on/off patterns [`exhaustive_interval`] will enumerate, as a power of two.
pub const MAX_ORACLE_BS: usize = 12;
/// Most locations the exact assignment search accepts.
pub const MAX_ORACLE_LOCATIONS: usize = 8;
/// Default cap on sizing combinations.
pub const SIZING_BUDGET: u128 = 10_000;

/// A scenario small enough for brute force.
#[derive(Debug, Clone)]
pub struct TinyInstance {
    pub sim: Simulation,
}

impl TinyInstance {
    pub const MAX_BS: usize = 4;
    pub const MAX_LOCATIONS: usize = 8;
    pub const MAX_INTERVALS: usize = 96;
    pub const SIZE_CAP: u32 = 2;

    /// Checks the size limits and clamps the sizing caps.
    pub fn from_simulation(mut sim: Simulation) -> Result<Self> {
        let sc = &sim.scenario;
        if sc.num_bs() > Self::MAX_BS
            || sc.num_locations() > Self::MAX_LOCATIONS
            || sc.time.horizon > Self::MAX_INTERVALS
        {
            return Err(Error::Contract(format!(
                "tiny instances allow {} base stations, {} locations and {} intervals; got {}, {}, {}",
                Self::MAX_BS,
                Self::MAX_LOCATIONS,
                Self::MAX_INTERVALS,
                sc.num_bs(),
                sc.num_locations(),
                sc.time.horizon
            )));
        }
        sim.scenario.panel_size_max = sim.scenario.panel_size_max.min(Self::SIZE_CAP);
        sim.scenario.battery_size_max = sim.scenario.battery_size_max.min(Self::SIZE_CAP);
        Ok(TinyInstance { sim })
    }

    pub fn new(scenario: Scenario) -> Result<Self> {
        Self::from_simulation(Simulation::new(scenario)?)
    }

    /// A random feasible instance on an 800 m square over four seasonal days.
    ///
    /// Attempts that leave some interval unservable are redrawn.
    pub fn random(seed: u64, num_bs: usize, num_locations: usize, kind: BsKind, city: &str) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let scenario = random_scenario(&mut rng, num_bs, num_locations, kind, city, seed);
            let Ok(tiny) = Self::new(scenario) else { continue };
            let sim = &tiny.sim;
            let servable = (0..sim.scenario.time.horizon).all(|t| {
                initial_assignment(&sim.matrix, sim.grid.actual(t), sim.scenario.rho).is_ok()
                    && initial_assignment(&sim.matrix, sim.grid.forecast(t), sim.scenario.rho).is_ok()
            });
            if servable {
                return Ok(tiny);
            }
        }
        Err(Error::Data(format!("no servable tiny instance found for seed {seed}")))
    }
}

fn random_scenario(
    rng: &mut ChaCha8Rng,
    num_bs: usize,
    num_locations: usize,
    kind: BsKind,
    city: &str,
    seed: u64,
) -> Scenario {
    let side = 800.0;
    let bs = (0..num_bs)
        .map(|i| BaseStation::new(i, kind, rng.gen_range(200.0..600.0), rng.gen_range(200.0..600.0)))
        .collect();
    let locs = (0..num_locations)
        .map(|j| LocationCell {
            id: j,
            x_m: rng.gen_range(100.0..700.0),
            y_m: rng.gen_range(100.0..700.0),
            profile_id: rng.gen_range(0..5),
        })
        .collect();
    let mut s = Scenario::new(bs, locs, TimeGrid::seasonal(1));
    s.name = format!("tiny-{seed}");
    s.seed = rng.gen();
    s.area = Area {
        width_m: side,
        height_m: side,
    };
    s.traffic.peak_mbps = rng.gen_range(4.0..12.0);
    s.traffic.edge_margin_m = 0.0;
    s.solar = SolarConfig {
        city: city.to_string(),
        seed: Some(seed),
        ..SolarConfig::default()
    };
    s
}

/// Inputs of one interval's brute-force schedule.
#[derive(Debug, Clone, Copy)]
pub struct IntervalProblem<'a> {
    pub matrix: &'a ServiceRateMatrix,
    /// Demand per location, Mbit/s.
    pub demand: &'a [f64],
    /// Battery content at the start of the interval, kWh.
    pub stored: &'a [f64],
    /// Harvest of this interval, kWh.
    pub harvest: &'a [f64],
    /// Consumption while on, kWh per interval.
    pub energy: &'a [f64],
    pub grid_price: f64,
    pub rho: f64,
}

impl IntervalProblem<'_> {
    /// Grid cost of an on/off pattern; assignment does not enter.
    pub fn cost(&self, on: &[bool]) -> f64 {
        on.iter()
            .enumerate()
            .filter(|&(_, &x)| x)
            .map(|(i, _)| {
                let r = renewable_ratio(self.stored[i], self.harvest[i], self.energy[i], true).unwrap_or(0.0);
                self.grid_price * self.energy[i] * (1.0 - r)
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalOptimum {
    pub on: Vec<bool>,
    /// Serving station per location.
    pub serving: Vec<usize>,
    pub cost: f64,
    pub feasible_patterns: usize,
}

/// Cheapest on/off pattern of one interval that admits a feasible assignment.
///
/// Every pattern is tried; feasibility is decided by exact search over
/// assignments. Equal costs prefer fewer stations on, then the pattern whose
/// on-vector sorts first. `Ok(None)` means no pattern is feasible.
pub fn exhaustive_interval(p: &IntervalProblem<'_>) -> Result<Option<IntervalOptimum>> {
    let n = p.matrix.num_bs();
    let m = p.matrix.num_locations();
    if n > MAX_ORACLE_BS || m > MAX_ORACLE_LOCATIONS {
        return Err(Error::Budget {
            needed: (1u128 << n.min(127)) * m as u128,
            limit: (1u128 << MAX_ORACLE_BS) * MAX_ORACLE_LOCATIONS as u128,
        });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p.demand[b].total_cmp(&p.demand[a]).then(a.cmp(&b)));

    let mut best: Option<IntervalOptimum> = None;
    let mut feasible_patterns = 0;
    for mask in 0u32..(1 << n) {
        let on: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let cost = p.cost(&on);
        let Some(serving) = exact_fit(&on, &order, p) else { continue };
        feasible_patterns += 1;
        let better = match &best {
            None => true,
            Some(b) => {
                let count = |v: &[bool]| v.iter().filter(|&&x| x).count();
                cost.total_cmp(&b.cost)
                    .then(count(&on).cmp(&count(&b.on)))
                    .then(on.cmp(&b.on))
                    .is_lt()
            }
        };
        if better {
            best = Some(IntervalOptimum {
                on,
                serving,
                cost,
                feasible_patterns: 0,
            });
        }
    }
    Ok(best.map(|mut b| {
        b.feasible_patterns = feasible_patterns;
        b
    }))
}

/// Depth-first search for an assignment of every location to an on station within `rho`.
fn exact_fit(on: &[bool], order: &[usize], p: &IntervalProblem<'_>) -> Option<Vec<usize>> {
    fn go(k: usize, on: &[bool], order: &[usize], p: &IntervalProblem<'_>, load: &mut [f64], serving: &mut [usize]) -> bool {
        let Some(&j) = order.get(k) else { return true };
        for i in 0..on.len() {
            if !on[i] {
                continue;
            }
            let w = p.matrix.weight(i, j, p.demand[j]);
            if load[i] + w <= p.rho + LOAD_EPS {
                load[i] += w;
                serving[j] = i;
                if go(k + 1, on, order, p, load, serving) {
                    return true;
                }
                load[i] -= w;
            }
        }
        false
    }
    let mut load = vec![0.0; on.len()];
    let mut serving = vec![usize::MAX; order.len()];
    go(0, on, order, p, &mut load, &mut serving).then_some(serving)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingOptimum {
    pub plan: SizingPlan,
    pub tco: TcoBreakdown,
    pub evaluated: usize,
}

/// Every plan within the scenario's caps, each simulated over the horizon.
///
/// Plans are visited in lexicographic order of (panels, batteries); the
/// first minimum wins.
pub fn exhaustive_sizing(sim: &Simulation, policy: Policy) -> Result<SizingOptimum> {
    exhaustive_sizing_within(sim, policy, SIZING_BUDGET)
}

pub fn exhaustive_sizing_within(sim: &Simulation, policy: Policy, budget: u128) -> Result<SizingOptimum> {
    let n = sim.scenario.num_bs();
    let (s_max, b_max) = (sim.scenario.panel_size_max, sim.scenario.battery_size_max);
    let per_bs = (s_max as u128 + 1) * (b_max as u128 + 1);
    let needed = per_bs.checked_pow(n as u32).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::Budget { needed, limit: budget });
    }
    let mut digits = vec![0u32; 2 * n];
    let radix: Vec<u32> = (0..2 * n).map(|k| if k < n { s_max + 1 } else { b_max + 1 }).collect();
    let mut best: Option<SizingOptimum> = None;
    let mut evaluated = 0;
    loop {
        let mut plan = SizingPlan {
            panels: digits[..n].to_vec(),
            batteries: digits[n..].to_vec(),
            tco: None,
        };
        let year = run_year(sim, &plan, policy)?;
        evaluated += 1;
        if best.as_ref().map_or(true, |b| year.tco.total < b.tco.total) {
            plan.tco = Some(year.tco);
            best = Some(SizingOptimum {
                plan,
                tco: year.tco,
                evaluated: 0,
            });
        }
        // Odometer increment, last digit fastest.
        let mut k = 2 * n;
        loop {
            if k == 0 {
                let mut b = best.expect("at least one plan is evaluated");
                b.evaluated = evaluated;
                return Ok(b);
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < radix[k] {
                break;
            }
            digits[k] = 0;
        }
    }
}
