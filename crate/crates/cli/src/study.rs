//! Experiment drivers shared by the commands: preset matrix and oracle studies.

use anyhow::Result;
use hebran_core::oracle::{exhaustive_interval, exhaustive_sizing, IntervalProblem, TinyInstance};
use hebran_core::scheduler::PolicyKind;
use hebran_core::sizing::{run_year, sizing_loop, RunOptions, YearLedger};
use hebran_core::{preset_scenario, BsKind, City, PresetOptions, Simulation, SizingPlan, TrafficDensity};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::report::RunResult;

/// How the plan of an evaluation is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanMode {
    Fixed(SizingPlan),
    /// Uniform panels and batteries, resolved per scenario size.
    Uniform { panels: u32, batteries: u32 },
    Sized,
}

/// Simulates one policy and returns the summary plus the ledger of the final plan.
///
/// With `grid_only` the zero plan is simulated as well for comparison.
pub fn evaluate(sim: &Simulation, kind: PolicyKind, mode: &PlanMode, grid_only: bool) -> Result<(RunResult, YearLedger)> {
    let policy = sim.policy(kind);
    let n = sim.scenario.num_bs();
    let (plan, history) = match mode {
        PlanMode::Fixed(p) => (p.clone(), Vec::new()),
        PlanMode::Uniform { panels, batteries } => (SizingPlan::uniform(n, *panels, *batteries), Vec::new()),
        PlanMode::Sized => {
            let outcome = sizing_loop(sim, policy)?;
            (outcome.best.clone(), outcome.history)
        }
    };
    let year = run_year(sim, &plan, policy)?;
    let mut result = RunResult::from_year(sim, kind, &plan, &year);
    result.sized = matches!(mode, PlanMode::Sized);
    result.history = history;
    if grid_only {
        result.grid_only_tco = Some(run_year(sim, &SizingPlan::zero(n), policy)?.tco.total);
    }
    Ok((result, year))
}

/// Cells and settings of a preset matrix.
#[derive(Debug, Clone)]
pub struct MatrixConfig {
    pub cities: Vec<City>,
    pub densities: Vec<TrafficDensity>,
    pub policies: Vec<PolicyKind>,
    pub seed: u64,
    pub preset: PresetOptions,
    pub alpha: Option<f64>,
    pub mode: PlanMode,
    pub grid_only: bool,
}

impl MatrixConfig {
    pub fn new(seed: u64, mode: PlanMode) -> Self {
        MatrixConfig {
            cities: City::ALL.to_vec(),
            densities: TrafficDensity::ALL.to_vec(),
            policies: PolicyKind::ALL.to_vec(),
            seed,
            preset: PresetOptions::default(),
            alpha: None,
            mode,
            grid_only: true,
        }
    }

    pub fn cells(&self) -> Vec<(City, TrafficDensity)> {
        self.cities
            .iter()
            .flat_map(|&c| self.densities.iter().map(move |&d| (c, d)))
            .collect()
    }
}

pub fn preset_simulation(city: City, density: TrafficDensity, seed: u64, opts: &PresetOptions, alpha: Option<f64>) -> Result<Simulation> {
    let mut scenario = preset_scenario(city, density, seed, opts)?;
    if let Some(a) = alpha {
        scenario.alpha = a;
    }
    Ok(Simulation::new(scenario)?)
}

/// One result per cell and policy, cells in city-major order.
///
/// Cells run in parallel; a failing cell yields rows with an error and the
/// remaining cells still run.
pub fn run_matrix(cfg: &MatrixConfig) -> Vec<RunResult> {
    let cells = cfg.cells();
    let per_cell: Vec<Vec<RunResult>> = cells
        .par_iter()
        .map(|&(city, density)| {
            let sim = match preset_simulation(city, density, cfg.seed, &cfg.preset, cfg.alpha) {
                Ok(s) => s,
                Err(e) => {
                    return cfg
                        .policies
                        .iter()
                        .map(|&p| failed_cell(city, density, cfg.seed, p, &e.to_string()))
                        .collect()
                }
            };
            cfg.policies
                .par_iter()
                .map(|&p| match evaluate(&sim, p, &cfg.mode, cfg.grid_only) {
                    Ok((r, _)) => r,
                    Err(e) => {
                        let mut r = RunResult::failed(&sim.scenario, p, format!("{e:#}"));
                        r.sized = matches!(cfg.mode, PlanMode::Sized);
                        r
                    }
                })
                .collect()
        })
        .collect();
    per_cell.into_iter().flatten().collect()
}

fn failed_cell(city: City, density: TrafficDensity, seed: u64, policy: PolicyKind, error: &str) -> RunResult {
    let mut s = hebran_core::Scenario::new(Vec::new(), Vec::new(), hebran_core::TimeGrid::seasonal(0));
    s.name = format!("{}-{}", city.name(), density.name());
    s.seed = seed;
    s.solar.city = city.name().into();
    RunResult::failed(&s, policy, error.to_string())
}

/// Heuristic and brute-force grid cost of one tiny instance under one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalGapRow {
    pub instance: usize,
    pub seed: u64,
    pub policy: PolicyKind,
    pub num_bs: usize,
    pub num_locations: usize,
    pub intervals: usize,
    /// Horizon grid cost of the heuristic's on/off patterns, priced like the oracle.
    pub heuristic_cost: f64,
    /// The same cost taken from the settled energy ledger.
    pub ledger_cost: f64,
    /// Sum of per-interval optima at the heuristic's battery states.
    pub oracle_cost: f64,
    /// Smallest per-interval difference heuristic minus optimum; negative would break the bound.
    pub min_interval_margin: f64,
    pub gap: f64,
}

/// Relative excess of `heuristic` over `optimum`; zero when they agree.
pub fn relative_gap(heuristic: f64, optimum: f64) -> f64 {
    let excess = heuristic - optimum;
    if excess.abs() <= 1e-12 * optimum.abs().max(1.0) {
        0.0
    } else if optimum > 0.0 {
        excess / optimum
    } else {
        f64::INFINITY
    }
}

/// The seeded tiny instance used by the oracle studies.
///
/// Shapes cycle through one to three stations and two to six locations;
/// each day forecasts itself so that decisions see the actual demand.
pub fn tiny_instance(seed: u64, num_bs: usize, num_locations: usize) -> Result<TinyInstance> {
    let kind = if seed % 2 == 0 { BsKind::Micro } else { BsKind::Macro };
    let city = City::ALL[(seed % 4) as usize].name();
    let mut tiny = TinyInstance::random(seed, num_bs, num_locations, kind, city)?;
    let days = tiny.sim.days();
    tiny.sim.grid.set_forecast_sources((0..days).collect());
    Ok(tiny)
}

pub fn interval_shape(instance: usize) -> (usize, usize) {
    (1 + instance % 3, 2 + (instance / 3) % 5)
}

/// Per-interval comparison against `exhaustive_interval` for every policy.
pub fn interval_gap_study(instances: usize, base_seed: u64, policies: &[PolicyKind]) -> Result<Vec<IntervalGapRow>> {
    let mut rows = Vec::new();
    for k in 0..instances {
        let seed = base_seed.wrapping_add(k as u64);
        let (n, m) = interval_shape(k);
        let tiny = tiny_instance(seed, n, m)?;
        let sim = &tiny.sim;
        let plan = SizingPlan::uniform(n, 1, 1);
        for &kind in policies {
            rows.push(interval_gap(k, seed, sim, &plan, kind)?);
        }
    }
    Ok(rows)
}

fn interval_gap(instance: usize, seed: u64, sim: &Simulation, plan: &SizingPlan, kind: PolicyKind) -> Result<IntervalGapRow> {
    let sc = &sim.scenario;
    let opts = RunOptions {
        keep_assignments: true,
        ..RunOptions::default()
    };
    let year = hebran_core::sizing::run_year_with(sim, plan, sim.policy(kind), opts)?;
    let price = sc.costs.effective_grid_price();
    let energy: Vec<f64> = sc.base_stations.iter().map(|b| b.energy_kwh).collect();
    let (mut heuristic, mut ledger, mut oracle, mut margin) = (0.0, 0.0, 0.0, f64::INFINITY);
    for t in 0..sc.time.horizon {
        let stored: Vec<f64> = (0..sc.num_bs()).map(|i| year.ledger.opening(i, t)).collect();
        let harvest: Vec<f64> = plan.panels.iter().map(|&s| s as f64 * sim.generation.at(t)).collect();
        let problem = IntervalProblem {
            matrix: &sim.matrix,
            demand: sim.grid.actual(t),
            stored: &stored,
            harvest: &harvest,
            energy: &energy,
            grid_price: price,
            rho: sc.rho,
        };
        let best = exhaustive_interval(&problem)?
            .ok_or_else(|| anyhow::anyhow!("instance {instance} has no feasible pattern at interval {t}"))?;
        let h = problem.cost(year.assignments[t].on());
        ledger += year.ledger.interval(t).iter().map(|r| r.grid_kwh * price).sum::<f64>();
        heuristic += h;
        oracle += best.cost;
        margin = margin.min(h - best.cost);
    }
    Ok(IntervalGapRow {
        instance,
        seed,
        policy: kind,
        num_bs: sc.num_bs(),
        num_locations: sc.num_locations(),
        intervals: sc.time.horizon,
        heuristic_cost: heuristic,
        ledger_cost: ledger,
        oracle_cost: oracle,
        min_interval_margin: margin,
        gap: relative_gap(heuristic, oracle),
    })
}

/// Sizing loop against exhaustive sizing on a two-station instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingGapRow {
    pub instance: usize,
    pub seed: u64,
    pub policy: PolicyKind,
    pub num_locations: usize,
    pub heuristic_tco: f64,
    pub oracle_tco: f64,
    pub heuristic_plan: SizingPlan,
    pub oracle_plan: SizingPlan,
    pub evaluated: usize,
    pub gap: f64,
}

pub fn sizing_gap(instance: usize, seed: u64, kind: PolicyKind) -> Result<SizingGapRow> {
    let m = 3 + instance % 4;
    let tiny = tiny_instance(seed, 2, m)?;
    let sim = &tiny.sim;
    let policy = sim.policy(kind);
    let heuristic = sizing_loop(sim, policy)?;
    let heuristic_tco = heuristic.best_record().tco.total;
    let optimum = exhaustive_sizing(sim, policy)?;
    let mut heuristic_plan = heuristic.best.clone();
    heuristic_plan.tco = None;
    let mut oracle_plan = optimum.plan.clone();
    oracle_plan.tco = None;
    Ok(SizingGapRow {
        instance,
        seed,
        policy: kind,
        num_locations: m,
        heuristic_tco,
        oracle_tco: optimum.tco.total,
        heuristic_plan,
        oracle_plan,
        evaluated: optimum.evaluated,
        gap: relative_gap(heuristic_tco, optimum.tco.total),
    })
}

pub fn sizing_gap_study(instances: usize, base_seed: u64, kind: PolicyKind) -> Result<Vec<SizingGapRow>> {
    (0..instances)
        .map(|k| sizing_gap(k, base_seed.wrapping_add(1000 + k as u64), kind))
        .collect()
}
