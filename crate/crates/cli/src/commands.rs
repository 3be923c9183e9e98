use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use hebran_core::energy::solar::{annual_profile, City};
use hebran_core::oracle::{export_reduced_model, reduced_simulation};
use hebran_core::scheduler::PolicyKind;
use hebran_core::sizing::{run_year_with, RunOptions};
use hebran_core::traffic::write_demand_csv;
use hebran_core::{preset_scenario, PresetOptions, Scenario, Simulation, SizingPlan, TimeGrid};

use crate::args::{Cli, Command, ExportArgs, GlobalArgs, MatrixArgs, OracleArgs, RunArgs, SynthArgs};
use crate::manifest::RunManifest;
use crate::report::{csv_bytes, emit_report, rerender, write_atomic, RunResult};
use crate::study::{self, MatrixConfig, PlanMode};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_HORIZON_DAYS: usize = 28;

pub fn run(cli: &Cli, argv: Vec<String>) -> Result<()> {
    let g = &cli.global;
    let name = match &cli.command {
        Command::Synth(_) => "synth",
        Command::Run(_) => "run",
        Command::Size => "size",
        Command::Matrix(_) => "matrix",
        Command::Oracle(_) => "oracle",
        Command::ExportMilp(_) => "export-milp",
        Command::Report(_) => "report",
    };
    match &cli.command {
        Command::Synth(a) => synth(g, a)?,
        Command::Run(a) => run_plan(g, a)?,
        Command::Size => size(g)?,
        Command::Matrix(a) => matrix(g, a)?,
        Command::Oracle(a) => oracle(g, a)?,
        Command::ExportMilp(a) => export(g, a)?,
        Command::Report(a) => {
            let files = rerender(&a.input)?;
            println!("redrew {} charts in {}", files.len(), a.input.display());
            return Ok(());
        }
    }
    RunManifest::new(
        name,
        argv,
        g.scenario.clone(),
        g.seed.unwrap_or(DEFAULT_SEED),
        g.policies().iter().map(|p| p.to_string()).collect(),
        g.out.clone(),
    )
    .write(&g.out)?;
    Ok(())
}

/// The time grid requested on the command line, if any.
pub fn time_grid(g: &GlobalArgs) -> Result<Option<TimeGrid>> {
    if g.full_year {
        return Ok(Some(TimeGrid::full_year()));
    }
    match g.horizon_days {
        None => Ok(None),
        Some(d) if d > 0 && d % 4 == 0 => Ok(Some(TimeGrid::seasonal(d / 4))),
        Some(d) => Err(hebran_core::Error::Contract(format!("--horizon-days must be a positive multiple of 4, got {d}")).into()),
    }
}

pub fn preset_options(g: &GlobalArgs) -> Result<PresetOptions> {
    let mut opts = PresetOptions {
        desk_scale: !g.full_scale,
        time: time_grid(g)?.unwrap_or_else(|| TimeGrid::seasonal(DEFAULT_HORIZON_DAYS / 4)),
        ..PresetOptions::default()
    };
    if let Some(side) = g.grid_side {
        opts.grid_side = side;
    }
    Ok(opts)
}

/// The scenario file with command-line overrides, or the requested preset.
pub fn scenario(g: &GlobalArgs) -> Result<Scenario> {
    let mut s = match &g.scenario {
        Some(path) => {
            let mut s = Scenario::load(path)?;
            if let Some(t) = time_grid(g)? {
                s.time = t;
            }
            if let Some(seed) = g.seed {
                s.seed = seed;
            }
            s
        }
        None => preset_scenario(g.city, g.traffic, g.seed.unwrap_or(DEFAULT_SEED), &preset_options(g)?)?,
    };
    if let Some(a) = g.alpha {
        s.alpha = a;
    }
    Ok(s)
}

fn simulation(g: &GlobalArgs) -> Result<Simulation> {
    Ok(Simulation::new(scenario(g)?)?)
}

fn synth(g: &GlobalArgs, a: &SynthArgs) -> Result<()> {
    if a.profiles {
        for city in City::ALL {
            let profile = annual_profile(&city.site(), hebran_core::energy::solar::PRESET_SEED);
            let mut buf = Vec::new();
            profile.write_csv(&mut buf)?;
            write_atomic(&g.out.join(format!("{}.csv", city.name())), &buf)?;
        }
        println!("wrote {} city profiles to {}", City::ALL.len(), g.out.display());
        return Ok(());
    }
    let sim = simulation(g)?;
    write_atomic(&g.out.join("scenario.toml"), sim.scenario.to_toml_string()?.as_bytes())?;
    let mut buf = Vec::new();
    write_demand_csv(&sim.grid, &mut buf)?;
    write_atomic(&g.out.join("demand.csv"), &buf)?;
    let mut buf = Vec::new();
    sim.generation.write_csv(&mut buf)?;
    write_atomic(&g.out.join("generation.csv"), &buf)?;
    let mut buf = Vec::new();
    sim.matrix.write_csv(&mut buf)?;
    write_atomic(&g.out.join("service_rates.csv"), &buf)?;
    println!(
        "{}: {} base stations, {} locations, {} intervals",
        sim.scenario.name,
        sim.scenario.num_bs(),
        sim.scenario.num_locations(),
        sim.scenario.time.horizon
    );
    Ok(())
}

fn load_plan(path: &Path, num_bs: usize) -> Result<SizingPlan> {
    let plan: SizingPlan =
        serde_json::from_slice(&fs::read(path).with_context(|| format!("reading {}", path.display()))?)?;
    if plan.panels.len() != num_bs || plan.batteries.len() != num_bs {
        return Err(hebran_core::Error::Contract(format!("plan {} does not cover {num_bs} base stations", path.display())).into());
    }
    Ok(plan)
}

fn run_plan(g: &GlobalArgs, a: &RunArgs) -> Result<()> {
    let sim = simulation(g)?;
    let n = sim.scenario.num_bs();
    let plan = match &a.plan {
        Some(p) => load_plan(p, n)?,
        None => SizingPlan::uniform(n, a.panels, a.batteries),
    };
    let mut results = Vec::new();
    for kind in g.policies() {
        let year = run_year_with(
            &sim,
            &plan,
            sim.policy(kind),
            RunOptions {
                record_decisions: true,
                ..RunOptions::default()
            },
        )?;
        write_policy_tables(&g.out, kind, &year)?;
        results.push(RunResult::from_year(&sim, kind, &plan, &year));
    }
    write_atomic(&g.out.join("plan.json"), serde_json::to_string_pretty(&plan)?.as_bytes())?;
    emit_report(&results, &g.out)?;
    print_summary(&results);
    Ok(())
}

fn write_policy_tables(out: &Path, kind: PolicyKind, year: &hebran_core::YearLedger) -> Result<()> {
    let mut buf = Vec::new();
    year.ledger.write_csv(&mut buf)?;
    write_atomic(&out.join(format!("ledger_{kind}.csv")), &buf)?;
    let rows = year.decisions.iter().map(|d| {
        vec![d.t.to_string(), d.bs_id.to_string(), u8::from(d.x).to_string(), d.load.to_string(), d.key.to_string()]
    });
    write_atomic(&out.join(format!("decisions_{kind}.csv")), &csv_bytes(&["t", "bs_id", "x", "load", "key"], rows)?)?;
    Ok(())
}

fn size(g: &GlobalArgs) -> Result<()> {
    let sim = simulation(g)?;
    let mut results = Vec::new();
    for kind in g.policies() {
        let (r, year) = study::evaluate(&sim, kind, &PlanMode::Sized, true)?;
        write_atomic(&g.out.join(format!("plan_{kind}.json")), serde_json::to_string_pretty(&r.plan)?.as_bytes())?;
        let mut buf = Vec::new();
        year.ledger.write_csv(&mut buf)?;
        write_atomic(&g.out.join(format!("ledger_{kind}.csv")), &buf)?;
        results.push(r);
    }
    emit_report(&results, &g.out)?;
    print_summary(&results);
    Ok(())
}

fn matrix(g: &GlobalArgs, a: &MatrixArgs) -> Result<()> {
    let mode = if a.size {
        PlanMode::Sized
    } else {
        PlanMode::Uniform {
            panels: a.panels,
            batteries: a.batteries,
        }
    };
    let mut cfg = MatrixConfig::new(g.seed.unwrap_or(DEFAULT_SEED), mode);
    cfg.preset = preset_options(g)?;
    cfg.policies = g.policies();
    cfg.alpha = g.alpha;
    if !a.cities.is_empty() {
        cfg.cities = a.cities.clone();
    }
    if !a.densities.is_empty() {
        cfg.densities = a.densities.clone();
    }
    let results = study::run_matrix(&cfg);
    emit_report(&results, &g.out)?;
    print_summary(&results);
    Ok(())
}

fn oracle(g: &GlobalArgs, a: &OracleArgs) -> Result<()> {
    let seed = g.seed.unwrap_or(DEFAULT_SEED);
    let rows = study::interval_gap_study(a.instances, seed, &g.policies())?;
    let bytes = csv_bytes(
        &["instance", "seed", "policy", "num_bs", "num_locations", "intervals", "heuristic_cost", "ledger_cost", "oracle_cost", "min_interval_margin", "gap"],
        rows.iter().map(|r| {
            vec![
                r.instance.to_string(),
                r.seed.to_string(),
                r.policy.to_string(),
                r.num_bs.to_string(),
                r.num_locations.to_string(),
                r.intervals.to_string(),
                r.heuristic_cost.to_string(),
                r.ledger_cost.to_string(),
                r.oracle_cost.to_string(),
                r.min_interval_margin.to_string(),
                r.gap.to_string(),
            ]
        }),
    )?;
    write_atomic(&g.out.join("oracle_interval.csv"), &bytes)?;

    let sizing_policy = g.policy.unwrap_or(PolicyKind::Hybrid);
    let sizing = study::sizing_gap_study(a.sizing_instances, seed, sizing_policy)?;
    let bytes = csv_bytes(
        &["instance", "seed", "policy", "num_locations", "heuristic_tco", "oracle_tco", "evaluated", "gap"],
        sizing.iter().map(|r| {
            vec![
                r.instance.to_string(),
                r.seed.to_string(),
                r.policy.to_string(),
                r.num_locations.to_string(),
                r.heuristic_tco.to_string(),
                r.oracle_tco.to_string(),
                r.evaluated.to_string(),
                r.gap.to_string(),
            ]
        }),
    )?;
    write_atomic(&g.out.join("oracle_sizing.csv"), &bytes)?;
    write_atomic(
        &g.out.join("oracle.json"),
        serde_json::to_string_pretty(&serde_json::json!({ "interval": rows, "sizing": sizing }))?.as_bytes(),
    )?;

    for kind in g.policies() {
        let gaps: Vec<f64> = rows.iter().filter(|r| r.policy == kind).map(|r| r.gap).collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len().max(1) as f64;
        let below = rows.iter().filter(|r| r.policy == kind && r.min_interval_margin < 0.0).count();
        println!("{kind}: mean interval gap {:.2}%, {below} instances below the optimum", 100.0 * mean);
    }
    let worst = sizing.iter().map(|r| r.gap).fold(0.0, f64::max);
    println!("sizing ({sizing_policy}): worst gap {:.2}% over {} instances", 100.0 * worst, sizing.len());
    Ok(())
}

fn export(g: &GlobalArgs, a: &ExportArgs) -> Result<()> {
    let sim = simulation(g)?;
    let model_sim = if a.no_reduce { sim } else { reduced_simulation(&sim)? };
    let text = export_reduced_model(&model_sim)?;
    write_atomic(&g.out.join("model.lp"), text.as_bytes())?;
    println!(
        "wrote {} ({} intervals, {} bytes)",
        g.out.join("model.lp").display(),
        model_sim.scenario.time.horizon,
        text.len()
    );
    Ok(())
}

fn print_summary(results: &[RunResult]) {
    for r in results {
        match &r.error {
            Some(e) => println!("{:<28} failed: {e}", r.label()),
            None => println!(
                "{:<28} tco {:>14.2}  normalized {:>10.3}  on {:>5.1}%",
                r.label(),
                r.tco.total,
                r.normalized_tco(),
                100.0 * r.on_ratio()
            ),
        }
    }
}
