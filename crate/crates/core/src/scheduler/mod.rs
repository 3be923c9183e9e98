//! Per-interval user association and base station switch on/off.
//!
//! Every policy starts from [`initial_assignment`] (all base stations on, each
//! location on its best-rate station with room left) and then tries to switch
//! stations off one at a time in ascending [`sort_key`] order, moving the
//! orphaned locations to other active stations. A candidate whose orphans do
//! not all fit is rolled back.

mod day;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ServiceRateMatrix;
use crate::error::Error;

pub use day::{run_day, DayContext, DayOutcome, DecisionRow};

/// Absolute slack when comparing a recomputed load against the bound.
pub const LOAD_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Load-ascending switch-off, the classical baseline.
    TrafficAware,
    /// Lowest stored renewable energy first.
    BatteryAware,
    /// Stored energy plus `alpha` times load.
    Hybrid,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::TrafficAware, PolicyKind::BatteryAware, PolicyKind::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::TrafficAware => "traffic",
            PolicyKind::BatteryAware => "battery",
            PolicyKind::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "traffic" | "traffic_aware" | "traffic-aware" => Ok(PolicyKind::TrafficAware),
            "battery" | "battery_aware" | "battery-aware" => Ok(PolicyKind::BatteryAware),
            "hybrid" => Ok(PolicyKind::Hybrid),
            other => Err(Error::Data(format!("unknown policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub kind: PolicyKind,
    /// kWh per unit of load; only the hybrid key uses it.
    pub alpha: f64,
    /// Sort the candidates once per interval even for load-dependent keys.
    pub sort_once: bool,
}

impl Policy {
    pub fn new(kind: PolicyKind, alpha: f64) -> Self {
        Policy {
            kind,
            alpha,
            sort_once: false,
        }
    }

    pub fn traffic_aware() -> Self {
        Self::new(PolicyKind::TrafficAware, 0.0)
    }

    pub fn battery_aware() -> Self {
        Self::new(PolicyKind::BatteryAware, 0.0)
    }

    pub fn hybrid(alpha: f64) -> Self {
        Self::new(PolicyKind::Hybrid, alpha)
    }

    fn resorts(&self) -> bool {
        !self.sort_once && self.kind != PolicyKind::BatteryAware
    }
}

/// Switch-off priority of a base station; lower keys are tried first.
pub fn sort_key(policy: &Policy, stored_kwh: f64, load: f64) -> f64 {
    match policy.kind {
        PolicyKind::BatteryAware => stored_kwh,
        PolicyKind::Hybrid => stored_kwh + policy.alpha * load,
        PolicyKind::TrafficAware => load,
    }
}

/// Which station serves each location for one interval, plus derived loads.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    on: Vec<bool>,
    serving: Vec<Option<usize>>,
    load: Vec<f64>,
}

impl Assignment {
    pub fn empty(num_bs: usize, num_locations: usize, on: bool) -> Self {
        Assignment {
            on: vec![on; num_bs],
            serving: vec![None; num_locations],
            load: vec![0.0; num_bs],
        }
    }

    pub fn on(&self) -> &[bool] {
        &self.on
    }

    pub fn is_on(&self, i: usize) -> bool {
        self.on[i]
    }

    pub fn on_count(&self) -> usize {
        self.on.iter().filter(|&&x| x).count()
    }

    pub fn serving(&self, j: usize) -> Option<usize> {
        self.serving[j]
    }

    pub fn servers(&self) -> &[Option<usize>] {
        &self.serving
    }

    pub fn loads(&self) -> &[f64] {
        &self.load
    }

    pub fn set_on(&mut self, i: usize, on: bool) {
        self.on[i] = on;
    }

    /// Points `j` at `bs` without touching loads; call [`Self::recompute_loads`] afterwards.
    pub fn set_serving(&mut self, j: usize, bs: Option<usize>) {
        self.serving[j] = bs;
    }

    /// `L_i = Σ_j W_ij z_ij`, summed in location order.
    pub fn recompute_loads(&mut self, demand: &[f64], matrix: &ServiceRateMatrix) {
        self.load.iter_mut().for_each(|l| *l = 0.0);
        for (j, s) in self.serving.iter().enumerate() {
            if let Some(i) = *s {
                self.load[i] += matrix.weight(i, j, demand[j]);
            }
        }
    }

    pub fn association(&self) -> Association {
        Association {
            num_bs: self.on.len(),
            num_locations: self.serving.len(),
            on: self.on.clone(),
            pairs: self
                .serving
                .iter()
                .enumerate()
                .filter_map(|(j, s)| s.map(|i| (i, j)))
                .collect(),
        }
    }

    /// Violations of this assignment against `demand`.
    pub fn check(&self, demand: &[f64], matrix: &ServiceRateMatrix, rho: f64) -> Vec<ConstraintViolation> {
        feasibility_check(&self.association(), demand, matrix, rho)
    }
}

/// Raw on/off and association decisions, with `z_ij = 1` for every listed pair.
///
/// Unlike [`Assignment`] this can express a location served twice, so the
/// checker can be pointed at arbitrary external decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct Association {
    pub num_bs: usize,
    pub num_locations: usize,
    pub on: Vec<bool>,
    pub pairs: Vec<(usize, usize)>,
}

impl Association {
    pub fn z(&self, i: usize, j: usize) -> bool {
        self.pairs.contains(&(i, j))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConstraintViolation {
    /// Demand of a location not covered by its servers' rates.
    Coverage { location: usize },
    /// Summed load weights above the utilization bound.
    Capacity { bs: usize, load: f64 },
    /// Location served by more than one station.
    SingleServer { location: usize, servers: usize },
    /// Station serving a location while switched off.
    ServedWhileOff { bs: usize, location: usize },
}

/// Checks coverage, capacity, single-server and on/off consistency for one interval.
pub fn feasibility_check(
    a: &Association,
    demand: &[f64],
    matrix: &ServiceRateMatrix,
    rho: f64,
) -> Vec<ConstraintViolation> {
    let mut out = Vec::new();
    let mut served_rate = vec![0.0; a.num_locations];
    let mut servers = vec![0usize; a.num_locations];
    let mut load = vec![0.0; a.num_bs];
    for &(i, j) in &a.pairs {
        served_rate[j] += matrix.rate(i, j);
        servers[j] += 1;
        load[i] += matrix.weight(i, j, demand[j]);
        if !a.on[i] {
            out.push(ConstraintViolation::ServedWhileOff { bs: i, location: j });
        }
    }
    for j in 0..a.num_locations {
        if served_rate[j] < demand[j] * 1.0e6 {
            out.push(ConstraintViolation::Coverage { location: j });
        }
        if servers[j] > 1 {
            out.push(ConstraintViolation::SingleServer {
                location: j,
                servers: servers[j],
            });
        }
    }
    for (i, &l) in load.iter().enumerate() {
        if l > rho + LOAD_EPS {
            out.push(ConstraintViolation::Capacity { bs: i, load: l });
        }
    }
    out
}

/// Descending demand, ties by location id.
fn demand_order(demand: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..demand.len()).collect();
    order.sort_by(|&a, &b| demand[b].total_cmp(&demand[a]).then(a.cmp(&b)));
    order
}

/// First-fit by rate over the stations marked available. Returns the location that did not fit.
pub(crate) fn assign_restricted(
    available: &[bool],
    demand: &[f64],
    matrix: &ServiceRateMatrix,
    rho: f64,
) -> Result<Assignment, usize> {
    let mut a = Assignment {
        on: available.to_vec(),
        serving: vec![None; demand.len()],
        load: vec![0.0; available.len()],
    };
    for j in demand_order(demand) {
        let placed = matrix.ranked(j).iter().copied().find(|&i| {
            available[i] && a.load[i] + matrix.weight(i, j, demand[j]) <= rho
        });
        match placed {
            Some(i) => {
                a.load[i] += matrix.weight(i, j, demand[j]);
                a.serving[j] = Some(i);
            }
            None => return Err(j),
        }
    }
    a.recompute_loads(demand, matrix);
    Ok(a)
}

/// All stations on; locations in descending demand order go to their best-rate
/// station that stays within `rho`, falling back down the ranking.
pub fn initial_assignment(matrix: &ServiceRateMatrix, demand: &[f64], rho: f64) -> Result<Assignment, Error> {
    let all = vec![true; matrix.num_bs()];
    assign_restricted(&all, demand, matrix, rho).map_err(|location| Error::Infeasible {
        location,
        interval: None,
    })
}

/// What happened inside one [`schedule_interval`] call.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScheduleTrace {
    /// Candidate order at the first iteration.
    pub first_order: Vec<usize>,
    /// Candidates in the order they were tried, with acceptance.
    pub attempts: Vec<(usize, bool)>,
}

pub fn schedule_interval(
    a: Assignment,
    demand: &[f64],
    matrix: &ServiceRateMatrix,
    stored_kwh: &[f64],
    policy: &Policy,
    rho: f64,
) -> Assignment {
    schedule_interval_traced(a, demand, matrix, stored_kwh, policy, rho).0
}

fn sort_candidates(cands: &mut [usize], keys: impl Fn(usize) -> f64) {
    cands.sort_by(|&a, &b| keys(a).total_cmp(&keys(b)).then(a.cmp(&b)));
}

/// [`schedule_interval`] that also reports the order in which candidates were tried.
pub fn schedule_interval_traced(
    mut a: Assignment,
    demand: &[f64],
    matrix: &ServiceRateMatrix,
    stored_kwh: &[f64],
    policy: &Policy,
    rho: f64,
) -> (Assignment, ScheduleTrace) {
    let mut trace = ScheduleTrace::default();
    a.recompute_loads(demand, matrix);
    let mut cands: Vec<usize> = (0..a.on.len()).filter(|&i| a.on[i]).collect();
    sort_candidates(&mut cands, |i| sort_key(policy, stored_kwh[i], a.load[i]));
    trace.first_order = cands.clone();

    let mut orphans: Vec<usize> = Vec::new();
    let mut first = true;
    while !cands.is_empty() {
        if policy.resorts() && !first {
            sort_candidates(&mut cands, |i| sort_key(policy, stored_kwh[i], a.load[i]));
        }
        first = false;
        let c = cands.remove(0);

        let snapshot = a.load.clone();
        orphans.clear();
        orphans.extend((0..a.serving.len()).filter(|&j| a.serving[j] == Some(c)));
        a.on[c] = false;
        a.load[c] = 0.0;
        // Hardest orphans first: largest weight on their best remaining station.
        let hardness = |j: usize| {
            matrix
                .ranked(j)
                .iter()
                .find(|&&i| a.on[i])
                .map_or(f64::INFINITY, |&i| matrix.weight(i, j, demand[j]))
        };
        let mut keyed: Vec<(f64, usize)> = orphans.iter().map(|&j| (hardness(j), j)).collect();
        keyed.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));

        let mut ok = true;
        for &(_, j) in &keyed {
            let target = matrix.ranked(j).iter().copied().find(|&i| {
                a.on[i] && a.load[i] + matrix.weight(i, j, demand[j]) <= rho
            });
            match target {
                Some(i) => {
                    a.load[i] += matrix.weight(i, j, demand[j]);
                    a.serving[j] = Some(i);
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }

        if ok {
            a.recompute_loads(demand, matrix);
        } else {
            for &j in &orphans {
                a.serving[j] = Some(c);
            }
            a.on[c] = true;
            a.load = snapshot;
        }
        trace.attempts.push((c, ok));
    }
    (a, trace)
}
