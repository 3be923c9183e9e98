use std::fs;
use std::path::Path;
use std::process::Command;

use hebran_cli::report::{emit_report, RunResult};
use hebran_cli::svg::PLOT_HEIGHT;
use hebran_core::oracle::TinyInstance;
use hebran_core::scheduler::PolicyKind;
use hebran_core::{run_year, BsKind, Simulation, SizingPlan, TimeGrid};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hebran"))
}

const SMALL: [&str; 8] = ["--city", "cairo", "--traffic", "sparse", "--horizon-days", "4", "--grid-side", "10"];

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn full_year_result(kind: PolicyKind) -> RunResult {
    let tiny = TinyInstance::random(17, 2, 3, BsKind::Macro, "istanbul").unwrap();
    let mut scenario = tiny.sim.scenario.clone();
    scenario.time = TimeGrid::full_year();
    let sim = Simulation::new(scenario).unwrap();
    let plan = SizingPlan::uniform(2, 1, 1);
    let year = run_year(&sim, &plan, sim.policy(kind)).unwrap();
    RunResult::from_year(&sim, kind, &plan, &year)
}

#[test]
fn empty_result_set_writes_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&[], dir.path()).unwrap();
    assert!(files.svg.is_empty());
    for name in ["summary.csv", "sizing_history.csv", "monthly_on_ratio.csv", "unstored_by_month.csv"] {
        let (header, rows) = read_csv(&dir.path().join(name));
        assert!(!header.is_empty(), "{name}");
        assert!(rows.is_empty(), "{name}");
    }
    assert!(fs::read_dir(dir.path()).unwrap().all(|e| e.unwrap().path().extension().unwrap() != "svg"));
}

#[test]
fn full_year_has_twelve_monthly_rows_per_policy() {
    let results: Vec<RunResult> = [PolicyKind::TrafficAware, PolicyKind::Hybrid].map(full_year_result).into();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&results, dir.path()).unwrap();
    let (_, rows) = read_csv(&dir.path().join("monthly_on_ratio.csv"));
    assert_eq!(rows.len(), 24);
    for policy in ["traffic", "hybrid"] {
        let months: Vec<&str> = rows.iter().filter(|r| r[1] == policy).map(|r| r[2].as_str()).collect();
        assert_eq!(months, (1..=12).map(|m| m.to_string()).collect::<Vec<_>>());
        assert!(rows.iter().filter(|r| r[1] == policy).all(|r| !r[3].is_empty()));
    }
    let (_, daily) = read_csv(&dir.path().join("daily_on_ratio.csv"));
    assert_eq!(daily.len(), 2 * 365);
}

#[test]
fn tco_bar_heights_are_proportional() {
    let mut results = Vec::new();
    for (k, tco) in [1200.0, 300.0, 900.0].into_iter().enumerate() {
        let mut r = full_year_result(PolicyKind::Hybrid);
        r.scenario = format!("toy-{k}");
        r.tco.total = tco;
        results.push(r);
    }
    let dir = tempfile::tempdir().unwrap();
    emit_report(&results, dir.path()).unwrap();
    let svg = fs::read_to_string(dir.path().join("tco_bars.svg")).unwrap();
    let attr = |line: &str, name: &str| -> f64 {
        let key = format!(" {name}=\"");
        let i = line.find(&key).unwrap() + key.len();
        line[i..i + line[i..].find('"').unwrap()].parse().unwrap()
    };
    let bars: Vec<(f64, f64)> = svg
        .lines()
        .filter(|l| l.contains("class=\"bar\""))
        .map(|l| (attr(l, "data-value"), attr(l, "height")))
        .collect();
    assert_eq!(bars.len(), 3);
    for (value, height) in &bars {
        assert!((height - PLOT_HEIGHT * value / 1200.0).abs() < 1e-4, "{value} -> {height}");
    }
}

#[test]
fn report_command_redraws_charts() {
    let dir = tempfile::tempdir().unwrap();
    emit_report(&[full_year_result(PolicyKind::BatteryAware)], dir.path()).unwrap();
    fs::remove_file(dir.path().join("monthly_on_ratio.svg")).unwrap();
    let out = bin().args(["report", "--input"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("monthly_on_ratio.svg").exists());
}

#[test]
fn run_writes_tables_and_one_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--panels", "1", "--batteries", "1", "--policy", "hybrid"])
        .args(SMALL)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["summary.csv", "ledger_hybrid.csv", "decisions_hybrid.csv", "plan.json", "tco_bars.svg", "manifest.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let manifest = hebran_cli::manifest::RunManifest::read(dir.path()).unwrap();
    assert_eq!(manifest.command, "run");
    assert_eq!(manifest.policies, vec!["hybrid"]);
    let (_, ledger) = read_csv(&dir.path().join("ledger_hybrid.csv"));
    assert_eq!(ledger.len(), 10 * 96);
}

#[test]
fn invalid_scenario_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let synth = bin().arg("synth").args(SMALL).arg("--out").arg(dir.path()).output().unwrap();
    assert!(synth.status.success());
    let path = dir.path().join("scenario.toml");
    let text = fs::read_to_string(&path).unwrap().replace("rho = 0.9", "rho = 1.5");
    fs::write(&path, text).unwrap();
    let out = bin().args(["run", "--scenario"]).arg(&path).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unservable_demand_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let synth = bin().arg("synth").args(SMALL).arg("--out").arg(dir.path()).output().unwrap();
    assert!(synth.status.success());
    let path = dir.path().join("scenario.toml");
    let text = fs::read_to_string(&path).unwrap();
    let start = text.find("peak_mbps = ").unwrap();
    let end = start + text[start..].find('\n').unwrap();
    fs::write(&path, format!("{}peak_mbps = 5000.0{}", &text[..start], &text[end..])).unwrap();
    let out = bin().args(["run", "--scenario"]).arg(&path).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn horizon_days_must_split_over_seasons() {
    let out = bin().args(["run", "--horizon-days", "5", "--out"]).arg(tempfile::tempdir().unwrap().path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn export_writes_a_parseable_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().arg("export-milp").args(SMALL).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lp = fs::read_to_string(dir.path().join("model.lp")).unwrap();
    assert!(lp.starts_with("\\ cairo-sparse"));
    assert!(lp.contains("\nSubject To\n") && lp.ends_with("End\n"));
}
