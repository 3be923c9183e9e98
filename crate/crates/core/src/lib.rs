//! Simulation and optimization of radio access networks whose base stations
//! draw on both the grid and their own solar panel and battery.
//!
//! The pipeline is: a [`Scenario`] describes the deployment and parameters;
//! [`traffic`] and [`channel`] turn it into demand and service rates;
//! [`scheduler`] decides per interval which stations sleep; [`energy`]
//! settles batteries and costs; [`sizing`] searches panel and battery sizes;
//! [`oracle`] provides exhaustive references for small instances.

pub mod channel;
pub mod energy;
pub mod error;
pub mod model;
pub mod oracle;
pub mod preset;
pub mod scheduler;
pub mod sizing;
pub mod traffic;

pub use channel::{build_service_matrix, ServiceRateMatrix};
pub use energy::{BatteryState, City, EnergyLedger, GenerationProfile, TcoBreakdown};
pub use error::{Error, Result};
pub use model::{
    Area, BaseStation, BsKind, CostParameters, DayInfo, LocationCell, Scenario, TimeGrid, ValidationReport, Violation,
};
pub use preset::{preset_scenario, PresetOptions, TrafficDensity};
pub use scheduler::{Assignment, Policy, PolicyKind};
pub use sizing::{run_year, sizing_loop, Simulation, SizingPlan, YearLedger};
pub use traffic::{build_demand_grid, TrafficGrid};
