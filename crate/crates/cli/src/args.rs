use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hebran_core::scheduler::PolicyKind;
use hebran_core::{City, TrafficDensity};

#[derive(Debug, Parser)]
#[command(name = "hebran", version, about = "Solar and battery sizing with base station switch-off scheduling")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Scenario TOML file; without it a city/traffic preset is generated.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Seed of the preset generator, or an override of the scenario's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Restrict to one scheduling policy; all three by default.
    #[arg(long, global = true, value_parser = parse_policy)]
    pub policy: Option<PolicyKind>,
    /// Load weight of the hybrid policy.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Simulated days, split evenly over the four seasons.
    #[arg(long, global = true, conflicts_with = "full_year")]
    pub horizon_days: Option<usize>,
    /// Simulate all 365 days.
    #[arg(long, global = true)]
    pub full_year: bool,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value = "istanbul", value_parser = parse_city)]
    pub city: City,
    #[arg(long, global = true, default_value = "normal", value_parser = parse_density)]
    pub traffic: TrafficDensity,
    /// Locations per side of the preset location grid.
    #[arg(long, global = true)]
    pub grid_side: Option<usize>,
    /// Use the full base station counts instead of the desk-scale ones.
    #[arg(long, global = true)]
    pub full_scale: bool,
}

impl GlobalArgs {
    pub fn policies(&self) -> Vec<PolicyKind> {
        match self.policy {
            Some(p) => vec![p],
            None => PolicyKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Write a scenario with its demand and generation, or the shipped city profiles.
    Synth(SynthArgs),
    /// Simulate the horizon under a fixed sizing plan.
    Run(RunArgs),
    /// Search panel and battery sizes.
    Size,
    /// Every city and traffic density under each policy.
    Matrix(MatrixArgs),
    /// Compare the heuristics against brute-force optima on tiny instances.
    Oracle(OracleArgs),
    /// Write the daily-reset model in LP format.
    ExportMilp(ExportArgs),
    /// Redraw the charts of an existing output directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Write one annual `<city>.csv` per preset city instead of a scenario.
    #[arg(long)]
    pub profiles: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Panel kW at every base station.
    #[arg(long, default_value_t = 0, conflicts_with = "plan")]
    pub panels: u32,
    /// Battery units at every base station.
    #[arg(long, default_value_t = 0, conflicts_with = "plan")]
    pub batteries: u32,
    /// Per-station plan as JSON, as written by `size`.
    #[arg(long)]
    pub plan: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MatrixArgs {
    /// Size panels and batteries per cell instead of using a fixed plan.
    #[arg(long)]
    pub size: bool,
    #[arg(long, default_value_t = 1)]
    pub panels: u32,
    #[arg(long, default_value_t = 1)]
    pub batteries: u32,
    /// Comma-separated subset of cities.
    #[arg(long, value_delimiter = ',', value_parser = parse_city)]
    pub cities: Vec<City>,
    /// Comma-separated subset of traffic densities.
    #[arg(long, value_delimiter = ',', value_parser = parse_density)]
    pub densities: Vec<TrafficDensity>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Random instances of the per-interval scheduling study.
    #[arg(long, default_value_t = 50)]
    pub instances: usize,
    /// Random two-station instances of the sizing study.
    #[arg(long, default_value_t = 10)]
    pub sizing_instances: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    /// Export the horizon as simulated instead of one average day per season.
    #[arg(long)]
    pub no_reduce: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Directory holding the CSV tables of an earlier run.
    #[arg(long)]
    pub input: PathBuf,
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    s.parse().map_err(|e: hebran_core::Error| e.to_string())
}

fn parse_city(s: &str) -> Result<City, String> {
    s.parse().map_err(|e: hebran_core::Error| e.to_string())
}

fn parse_density(s: &str) -> Result<TrafficDensity, String> {
    s.parse().map_err(|e: hebran_core::Error| e.to_string())
}
