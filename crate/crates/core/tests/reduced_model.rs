mod support;

use hebran_core::oracle::{export_reduced_model, reduced_simulation, TinyInstance};
use hebran_core::BsKind;
use support::lp;

fn tiny(seed: u64, n: usize, m: usize) -> TinyInstance {
    TinyInstance::random(seed, n, m, BsKind::Micro, "cairo").unwrap()
}

#[test]
fn two_stations_three_locations_give_964_variables() {
    let t = tiny(3, 2, 3);
    let reduced = reduced_simulation(&t.sim).unwrap();
    assert_eq!(reduced.scenario.time.horizon, 96);
    let model = lp::parse(&export_reduced_model(&reduced).unwrap()).unwrap();
    assert_eq!(model.variables().len(), 2 + 2 + 2 * 96 + 2 * 96 + 2 * 3 * 96);
    assert_eq!(model.general.len(), 4);
    assert_eq!(model.binary.len(), 2 * 96 + 2 * 3 * 96);
    assert!(model.minimize);
}

#[test]
fn every_location_is_assigned_once_per_interval() {
    let t = tiny(8, 3, 4);
    let model = lp::parse(&export_reduced_model(&t.sim).unwrap()).unwrap();
    let assign: Vec<_> = model.rows.iter().filter(|r| r.name.starts_with("assign_")).collect();
    assert_eq!(assign.len(), 4 * 96);
    for r in assign {
        assert_eq!(r.sense, lp::Sense::Eq);
        assert_eq!(r.rhs, 1.0);
        assert!(r.terms.iter().all(|(c, v)| *c == 1.0 && v.starts_with("z_")));
    }
}

#[test]
fn zero_plan_all_on_costs_the_full_grid_bill() {
    let t = tiny(5, 2, 3);
    let reduced = reduced_simulation(&t.sim).unwrap();
    let model = lp::parse(&export_reduced_model(&reduced).unwrap()).unwrap();
    let sc = &reduced.scenario;
    let mut values = std::collections::HashMap::new();
    for i in 0..2 {
        for tt in 0..96 {
            values.insert(format!("x_{i}_{tt}"), 1.0);
        }
    }
    let energy: f64 = sc.base_stations.iter().map(|b| b.energy_kwh).sum();
    let expected = sc.costs.effective_grid_price() * energy * sc.costs.amortization_years * 8760.0;
    let got = model.objective_at(&values);
    assert!((got - expected).abs() <= 1e-9 * expected, "{got} vs {expected}");
}

#[test]
fn seasonal_reduction_keeps_mean_demand() {
    let t = TinyInstance::random(21, 2, 4, BsKind::Macro, "istanbul").unwrap();
    let mut scenario = t.sim.scenario.clone();
    scenario.time = hebran_core::TimeGrid::seasonal(3);
    let sim = hebran_core::Simulation::new(scenario).unwrap();
    let reduced = reduced_simulation(&sim).unwrap();
    assert_eq!(reduced.days(), 4);
    for season in 0..4 {
        for h in [0, 9, 20] {
            for j in 0..4 {
                let mean = (0..3).map(|d| sim.grid.actual((season * 3 + d) * 24 + h)[j]).sum::<f64>() / 3.0;
                let got = reduced.grid.actual(season * 24 + h)[j];
                assert!((got - mean).abs() <= 1e-12 * mean.max(1.0));
            }
        }
    }
}

#[test]
fn reader_rejects_truncated_text() {
    let t = tiny(3, 2, 3);
    let text = export_reduced_model(&t.sim).unwrap();
    assert!(lp::parse(text.trim_end().strip_suffix("End").unwrap()).is_err());
    assert!(lp::parse(&text.replace("Subject To", "Subject To\n c0: + 1 x_0_0 <=")).is_err());
}
