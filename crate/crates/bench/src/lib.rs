//! Fixtures shared by the benchmarks in `benches/`.

use hebran_core::{preset_scenario, City, PresetOptions, Simulation, TimeGrid, TrafficDensity};

/// A two-day desk-scale Istanbul preset.
pub fn desk_simulation(density: TrafficDensity) -> Simulation {
    let opts = PresetOptions {
        time: TimeGrid::consecutive(180, 2),
        ..PresetOptions::default()
    };
    Simulation::new(preset_scenario(City::Istanbul, density, 7, &opts).expect("preset")).expect("simulation")
}

/// The interval of highest total demand, where scheduling does the most work.
pub fn busiest_interval(sim: &Simulation) -> usize {
    (0..sim.scenario.time.horizon)
        .max_by(|&a, &b| {
            let sa: f64 = sim.grid.actual(a).iter().sum();
            let sb: f64 = sim.grid.actual(b).iter().sum();
            sa.total_cmp(&sb).then(b.cmp(&a))
        })
        .unwrap_or(0)
}
