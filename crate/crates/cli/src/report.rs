//! CSV tables and SVG charts summarizing completed runs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hebran_core::energy::TcoBreakdown;
use hebran_core::scheduler::PolicyKind;
use hebran_core::sizing::{SizingRecord, YearLedger};
use hebran_core::{Scenario, SizingPlan, Simulation};
use serde::{Deserialize, Serialize};

use crate::svg;

const MONTHS: [&str; 12] = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

/// Everything the reports need from one (scenario, policy) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub scenario: String,
    pub city: String,
    pub traffic: String,
    pub policy: PolicyKind,
    pub sized: bool,
    pub plan: SizingPlan,
    pub tco: TcoBreakdown,
    /// Same scenario and policy without panels or batteries.
    pub grid_only_tco: Option<f64>,
    /// Demand over the horizon per km² per simulated day, Mbit.
    pub mbit_per_km2_day: f64,
    pub daily_on_ratio: Vec<f64>,
    pub monthly_on_ratio: [Option<f64>; 12],
    pub unstored_by_month: [f64; 12],
    pub repaired_intervals: usize,
    pub violations: usize,
    pub history: Vec<SizingRecord>,
    /// Failure message when the evaluation did not complete.
    pub error: Option<String>,
}

impl RunResult {
    pub fn from_year(sim: &Simulation, policy: PolicyKind, plan: &SizingPlan, year: &YearLedger) -> Self {
        let sc = &sim.scenario;
        let mut plan = plan.clone();
        plan.tco = Some(year.tco);
        RunResult {
            scenario: sc.name.clone(),
            city: sc.solar.city.clone(),
            traffic: traffic_label(sc),
            policy,
            sized: false,
            plan,
            tco: year.tco,
            grid_only_tco: None,
            mbit_per_km2_day: traffic_density(sim),
            daily_on_ratio: year.daily_on_ratio.clone(),
            monthly_on_ratio: year.monthly_on_ratio,
            unstored_by_month: year.unstored_by_month,
            repaired_intervals: year.repaired_intervals,
            violations: year.violations,
            history: Vec::new(),
            error: None,
        }
    }

    pub fn failed(scenario: &Scenario, policy: PolicyKind, error: String) -> Self {
        RunResult {
            scenario: scenario.name.clone(),
            city: scenario.solar.city.clone(),
            traffic: traffic_label(scenario),
            policy,
            sized: false,
            plan: SizingPlan::zero(scenario.num_bs()),
            tco: TcoBreakdown::default(),
            grid_only_tco: None,
            mbit_per_km2_day: 0.0,
            daily_on_ratio: Vec::new(),
            monthly_on_ratio: [None; 12],
            unstored_by_month: [0.0; 12],
            repaired_intervals: 0,
            violations: 0,
            history: Vec::new(),
            error: Some(error),
        }
    }

    /// TCO per unit of served traffic density.
    pub fn normalized_tco(&self) -> f64 {
        if self.mbit_per_km2_day > 0.0 {
            self.tco.total / self.mbit_per_km2_day
        } else {
            f64::NAN
        }
    }

    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.city, self.traffic, self.policy)
    }

    pub fn on_ratio(&self) -> f64 {
        if self.daily_on_ratio.is_empty() {
            0.0
        } else {
            self.daily_on_ratio.iter().sum::<f64>() / self.daily_on_ratio.len() as f64
        }
    }
}

/// Preset scenarios are named `<city>-<density>`; anything else has no density label.
fn traffic_label(s: &Scenario) -> String {
    s.name
        .rsplit_once('-')
        .filter(|(city, _)| *city == s.solar.city)
        .map(|(_, d)| d.to_string())
        .unwrap_or_default()
}

/// Demand of the whole horizon in Mbit, per km² and simulated day.
pub fn traffic_density(sim: &Simulation) -> f64 {
    sim.grid.total_mbit() / sim.scenario.area.km2() / sim.days() as f64
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("writing {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const SUMMARY_HEADER: [&str; 20] = [
    "scenario",
    "city",
    "traffic",
    "policy",
    "sized",
    "panels_kw",
    "battery_units",
    "capex_panels",
    "capex_batteries",
    "opex_grid",
    "tco",
    "reported_tco",
    "grid_only_tco",
    "mbit_per_km2_day",
    "normalized_tco",
    "on_ratio",
    "repaired_intervals",
    "violations",
    "status",
    "error",
];

fn summary_row(r: &RunResult) -> Vec<String> {
    vec![
        r.scenario.clone(),
        r.city.clone(),
        r.traffic.clone(),
        r.policy.to_string(),
        r.sized.to_string(),
        r.plan.total_panels().to_string(),
        r.plan.total_batteries().to_string(),
        r.tco.capex_panels.to_string(),
        r.tco.capex_batteries.to_string(),
        r.tco.opex_grid.to_string(),
        r.tco.total.to_string(),
        r.tco.reported_total().to_string(),
        opt(r.grid_only_tco),
        r.mbit_per_km2_day.to_string(),
        r.normalized_tco().to_string(),
        r.on_ratio().to_string(),
        r.repaired_intervals.to_string(),
        r.violations.to_string(),
        if r.error.is_some() { "failed" } else { "ok" }.to_string(),
        r.error.clone().unwrap_or_default(),
    ]
}

/// Files written by [`emit_report`].
#[derive(Debug, Default, Clone)]
pub struct ReportFiles {
    pub csv: Vec<PathBuf>,
    pub svg: Vec<PathBuf>,
}

/// Summary, sizing history and monthly tables plus charts for `results`.
///
/// With no successful result only the CSV headers are written.
pub fn emit_report(results: &[RunResult], outdir: &Path) -> Result<ReportFiles> {
    let mut files = ReportFiles::default();
    let ok: Vec<&RunResult> = results.iter().filter(|r| r.error.is_none()).collect();
    let mut put_csv = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let p = outdir.join(name);
        write_atomic(&p, &bytes)?;
        files.csv.push(p);
        Ok(())
    };

    put_csv("summary.csv", csv_bytes(&SUMMARY_HEADER, results.iter().map(summary_row))?)?;
    put_csv(
        "sizing_history.csv",
        csv_bytes(
            &["scenario", "policy", "iteration", "step", "sum_panels_kw", "sum_battery_units", "capex", "opex", "tco"],
            ok.iter().flat_map(|r| {
                r.history.iter().map(move |h| {
                    vec![
                        r.scenario.clone(),
                        r.policy.to_string(),
                        h.iteration.to_string(),
                        h.step.to_string(),
                        h.plan.total_panels().to_string(),
                        h.plan.total_batteries().to_string(),
                        h.tco.capex().to_string(),
                        h.tco.opex_grid.to_string(),
                        h.tco.total.to_string(),
                    ]
                })
            }),
        )?,
    )?;
    put_csv(
        "monthly_on_ratio.csv",
        csv_bytes(
            &["scenario", "policy", "month", "on_ratio"],
            ok.iter().flat_map(|r| {
                (0..12).map(move |m| vec![r.scenario.clone(), r.policy.to_string(), (m + 1).to_string(), opt(r.monthly_on_ratio[m])])
            }),
        )?,
    )?;
    put_csv(
        "unstored_by_month.csv",
        csv_bytes(
            &["scenario", "policy", "month", "unstored_kwh"],
            ok.iter().flat_map(|r| {
                (0..12).map(move |m| {
                    vec![r.scenario.clone(), r.policy.to_string(), (m + 1).to_string(), r.unstored_by_month[m].to_string()]
                })
            }),
        )?,
    )?;
    put_csv(
        "daily_on_ratio.csv",
        csv_bytes(
            &["scenario", "policy", "day", "on_ratio"],
            ok.iter().flat_map(|r| {
                r.daily_on_ratio
                    .iter()
                    .enumerate()
                    .map(move |(d, v)| vec![r.scenario.clone(), r.policy.to_string(), d.to_string(), v.to_string()])
            }),
        )?,
    )?;

    if !ok.is_empty() {
        files.svg.extend(emit_charts(&ok, outdir)?);
    }
    Ok(files)
}

fn emit_charts(ok: &[&RunResult], outdir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let p = outdir.join(name);
        write_atomic(&p, text.as_bytes())?;
        out.push(p);
        Ok(())
    };
    let labels: Vec<String> = ok.iter().map(|r| r.label()).collect();
    put(
        "tco_bars.svg",
        svg::bar_chart("Total cost of ownership", "USD", &labels, &ok.iter().map(|r| r.tco.total).collect::<Vec<_>>()),
    )?;
    let norm: Vec<f64> = ok.iter().map(|r| r.normalized_tco()).collect();
    if norm.iter().all(|v| v.is_finite()) {
        put("normalized_tco_bars.svg", svg::bar_chart("Normalized TCO", "USD per Mbit/km2/day", &labels, &norm))?;
    }
    let months: Vec<String> = MONTHS.iter().map(|m| m.to_string()).collect();
    put(
        "monthly_on_ratio.svg",
        svg::grouped_bar_chart(
            "Share of base stations on",
            "on ratio",
            &months,
            &ok.iter().map(|r| (r.label(), r.monthly_on_ratio.to_vec())).collect::<Vec<_>>(),
        ),
    )?;
    put(
        "monthly_unstored.svg",
        svg::grouped_bar_chart(
            "Unstored renewable energy",
            "kWh",
            &months,
            &ok.iter().map(|r| (r.label(), r.unstored_by_month.iter().map(|&v| Some(v)).collect())).collect::<Vec<_>>(),
        ),
    )?;
    put(
        "daily_on_ratio.svg",
        svg::line_chart(
            "Share of base stations on per day",
            "on ratio",
            "simulated day",
            &ok.iter().map(|r| (r.label(), r.daily_on_ratio.clone())).collect::<Vec<_>>(),
        ),
    )?;
    Ok(out)
}

/// Re-renders the charts of an existing output directory from its CSV tables.
pub fn rerender(dir: &Path) -> Result<Vec<PathBuf>> {
    let summary = read_rows(&dir.join("summary.csv"))?;
    let mut results: Vec<RunResult> = Vec::new();
    for row in &summary {
        let get = |k: &str| row.iter().find(|(h, _)| h == k).map(|(_, v)| v.clone()).unwrap_or_default();
        if get("status") != "ok" {
            continue;
        }
        let policy: PolicyKind = get("policy").parse()?;
        let num = |k: &str| get(k).parse::<f64>().unwrap_or(f64::NAN);
        results.push(RunResult {
            scenario: get("scenario"),
            city: get("city"),
            traffic: get("traffic"),
            policy,
            sized: get("sized") == "true",
            plan: SizingPlan::zero(0),
            tco: TcoBreakdown {
                capex_panels: num("capex_panels"),
                capex_batteries: num("capex_batteries"),
                opex_grid: num("opex_grid"),
                total: num("tco"),
                extras: num("reported_tco") - num("tco"),
            },
            grid_only_tco: get("grid_only_tco").parse().ok(),
            mbit_per_km2_day: num("mbit_per_km2_day"),
            daily_on_ratio: Vec::new(),
            monthly_on_ratio: [None; 12],
            unstored_by_month: [0.0; 12],
            repaired_intervals: 0,
            violations: 0,
            history: Vec::new(),
            error: None,
        });
    }
    let key = |r: &[(String, String)]| {
        let get = |k: &str| r.iter().find(|(h, _)| h == k).map(|(_, v)| v.clone()).unwrap_or_default();
        (get("scenario"), get("policy"))
    };
    for row in read_rows(&dir.join("monthly_on_ratio.csv"))? {
        let (sc, pol) = key(&row);
        if let Some(r) = results.iter_mut().find(|r| r.scenario == sc && r.policy.to_string() == pol) {
            let m: usize = field(&row, "month").parse()?;
            r.monthly_on_ratio[m - 1] = field(&row, "on_ratio").parse().ok();
        }
    }
    for row in read_rows(&dir.join("unstored_by_month.csv"))? {
        let (sc, pol) = key(&row);
        if let Some(r) = results.iter_mut().find(|r| r.scenario == sc && r.policy.to_string() == pol) {
            let m: usize = field(&row, "month").parse()?;
            r.unstored_by_month[m - 1] = field(&row, "unstored_kwh").parse()?;
        }
    }
    if let Ok(rows) = read_rows(&dir.join("daily_on_ratio.csv")) {
        for row in rows {
            let (sc, pol) = key(&row);
            if let Some(r) = results.iter_mut().find(|r| r.scenario == sc && r.policy.to_string() == pol) {
                r.daily_on_ratio.push(field(&row, "on_ratio").parse()?);
            }
        }
    }
    let ok: Vec<&RunResult> = results.iter().collect();
    if ok.is_empty() {
        return Ok(Vec::new());
    }
    emit_charts(&ok, dir)
}

fn field(row: &[(String, String)], k: &str) -> String {
    row.iter().find(|(h, _)| h == k).map(|(_, v)| v.clone()).unwrap_or_default()
}

fn read_rows(path: &Path) -> Result<Vec<Vec<(String, String)>>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(headers.iter().cloned().zip(rec.iter().map(String::from)).collect());
    }
    Ok(out)
}
