use std::fmt::Write as _;

use crate::energy::{opex_scale, GenerationProfile};
use crate::error::{Error, Result};
use crate::model::{DayInfo, TimeGrid, HOURS_PER_DAY};
use crate::sizing::Simulation;
use crate::traffic::TrafficGrid;

/// Decision variables of the exported model and their names in the LP file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LpVar {
    /// Panel size of a station.
    Panel(usize),
    /// Battery units of a station.
    Battery(usize),
    /// On/off of station `i` in interval `t`.
    On(usize, usize),
    /// Renewable ratio of station `i` in interval `t`.
    Ratio(usize, usize),
    /// Station `i` serves location `j` in interval `t`.
    Serve(usize, usize, usize),
}

impl LpVar {
    pub fn name(&self) -> String {
        match *self {
            LpVar::Panel(i) => format!("s_{i}"),
            LpVar::Battery(i) => format!("b_{i}"),
            LpVar::On(i, t) => format!("x_{i}_{t}"),
            LpVar::Ratio(i, t) => format!("r_{i}_{t}"),
            LpVar::Serve(i, j, t) => format!("z_{i}_{j}_{t}"),
        }
    }
}

/// Collapses the horizon to one average day per season present, in season order.
///
/// Demand and generation are plain arithmetic means over the days of each
/// season. Each representative day forecasts itself.
pub fn reduced_simulation(sim: &Simulation) -> Result<Simulation> {
    let calendar = &sim.scenario.time.calendar;
    let n_loc = sim.scenario.num_locations();
    let mut by_season: [Vec<usize>; 4] = Default::default();
    for (d, info) in calendar.iter().enumerate() {
        by_season[info.season()].push(d);
    }
    let mut days = Vec::new();
    let mut demand = Vec::new();
    let mut generation = Vec::new();
    for members in by_season.iter().filter(|m| !m.is_empty()) {
        let first = calendar[members[0]];
        days.push(DayInfo {
            day_of_year: first.day_of_year,
            weekday: (days.len() % 7) as u8,
        });
        let k = members.len() as f64;
        for h in 0..HOURS_PER_DAY {
            let mut row = vec![0.0; n_loc];
            let mut g = 0.0;
            for &d in members {
                let t = d * HOURS_PER_DAY + h;
                for (acc, v) in row.iter_mut().zip(sim.grid.actual(t)) {
                    *acc += v;
                }
                g += sim.generation.at(t);
            }
            demand.extend(row.into_iter().map(|v| v / k));
            generation.push(g / k);
        }
    }
    let time = TimeGrid {
        interval_hours: sim.scenario.time.interval_hours,
        horizon: days.len() * HOURS_PER_DAY,
        calendar: days,
    };
    let mut grid = TrafficGrid::from_actual(&time, n_loc, demand)?;
    grid.set_forecast_sources((0..time.days()).collect());
    grid.profiles = sim.grid.profiles.clone();
    let generation = GenerationProfile {
        kwh_per_kw: generation,
        annual_total: sim.generation.annual_total,
    };
    let mut scenario = sim.scenario.clone();
    scenario.time = time;
    Simulation::from_parts(scenario, grid, sim.matrix.clone(), generation)
}

/// A linear expression being written as LP text.
struct Expr(Vec<(f64, String)>);

impl Expr {
    fn new() -> Self {
        Expr(Vec::new())
    }

    fn add(&mut self, coef: f64, var: LpVar) {
        if coef != 0.0 {
            self.0.push((coef, var.name()));
        }
    }

    fn write(&self, out: &mut String) {
        for (k, (c, v)) in self.0.iter().enumerate() {
            if k > 0 && k % 6 == 0 {
                out.push_str("\n   ");
            }
            let sign = if *c < 0.0 { '-' } else { '+' };
            let _ = write!(out, " {sign} {} {v}", c.abs());
        }
    }
}

fn row(out: &mut String, name: &str, e: &Expr, sense: &str, rhs: f64) {
    if e.0.is_empty() {
        return;
    }
    let _ = write!(out, " {name}:");
    e.write(out);
    let _ = writeln!(out, " {sense} {rhs}");
}

fn name_lines(out: &mut String, vars: impl Iterator<Item = LpVar>) {
    let names: Vec<String> = vars.map(|v| v.name()).collect();
    for chunk in names.chunks(16) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
}

/// The daily-reset model of `sim` in CPLEX LP format.
///
/// Lifetime grid cost is linear in `x - r` because `r` is bounded by `x`.
/// Batteries start every day empty, so renewable use within a day is capped
/// by that day's harvest, use after the last daylight interval by the
/// battery capacity, and use before the first one is zero.
pub fn export_reduced_model(sim: &Simulation) -> Result<String> {
    let sc = &sim.scenario;
    let horizon = sc.time.horizon;
    if horizon == 0 || horizon % HOURS_PER_DAY != 0 {
        return Err(Error::Contract(format!("horizon {horizon} is not a whole number of days")));
    }
    let (n, m) = (sc.num_bs(), sc.num_locations());
    let days = horizon / HOURS_PER_DAY;
    let costs = &sc.costs;
    let price = costs.effective_grid_price();
    let scale = opex_scale(horizon, costs);
    let unit = costs.battery_unit_kwh;
    let energy: Vec<f64> = sc.base_stations.iter().map(|b| b.energy_kwh).collect();
    let reachable = |i: usize, j: usize| sim.matrix.rate(i, j) > 0.0;
    let g = |t: usize| sim.generation.at(t);

    let mut out = String::new();
    let _ = writeln!(out, "\\ {}: {n} base stations, {m} locations, {horizon} intervals", sc.name);
    let _ = writeln!(out, "\\ batteries reset at every day boundary; opex scale {scale}");
    out.push_str("Minimize\n obj:");
    let mut obj = Expr::new();
    for i in 0..n {
        obj.add(costs.panel_usd_per_kw, LpVar::Panel(i));
        obj.add(costs.battery_usd_per_unit, LpVar::Battery(i));
    }
    for t in 0..horizon {
        for i in 0..n {
            let c = scale * price * energy[i];
            obj.add(c, LpVar::On(i, t));
            obj.add(-c, LpVar::Ratio(i, t));
        }
    }
    obj.write(&mut out);
    out.push_str("\nSubject To\n");

    for t in 0..horizon {
        let demand = sim.grid.actual(t);
        for j in 0..m {
            let mut one = Expr::new();
            let mut rate = Expr::new();
            for i in (0..n).filter(|&i| reachable(i, j)) {
                one.add(1.0, LpVar::Serve(i, j, t));
                rate.add(sim.matrix.rate(i, j) / 1.0e6, LpVar::Serve(i, j, t));
            }
            row(&mut out, &format!("assign_{j}_{t}"), &one, "=", 1.0);
            row(&mut out, &format!("rate_{j}_{t}"), &rate, ">=", demand[j]);
        }
        for i in 0..n {
            let mut cap = Expr::new();
            for j in (0..m).filter(|&j| reachable(i, j)) {
                cap.add(sim.matrix.weight(i, j, demand[j]), LpVar::Serve(i, j, t));
                let mut link = Expr::new();
                link.add(1.0, LpVar::Serve(i, j, t));
                link.add(-1.0, LpVar::On(i, t));
                row(&mut out, &format!("link_{i}_{j}_{t}"), &link, "<=", 0.0);
            }
            cap.add(-sc.rho, LpVar::On(i, t));
            row(&mut out, &format!("cap_{i}_{t}"), &cap, "<=", 0.0);

            let mut ren = Expr::new();
            ren.add(1.0, LpVar::Ratio(i, t));
            ren.add(-1.0, LpVar::On(i, t));
            row(&mut out, &format!("ren_{i}_{t}"), &ren, "<=", 0.0);

            let mut hour = Expr::new();
            hour.add(energy[i], LpVar::Ratio(i, t));
            hour.add(-g(t), LpVar::Panel(i));
            hour.add(-unit, LpVar::Battery(i));
            row(&mut out, &format!("hour_{i}_{t}"), &hour, "<=", 0.0);
        }
    }

    let mut dark_before_dawn = Vec::new();
    for d in 0..days {
        let span = d * HOURS_PER_DAY..(d + 1) * HOURS_PER_DAY;
        let lit: Vec<usize> = span.clone().filter(|&t| g(t) > 0.0).collect();
        let harvest: f64 = span.clone().map(g).sum();
        let (dawn, dusk) = match (lit.first(), lit.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (span.end, span.end),
        };
        dark_before_dawn.extend(span.start..dawn);
        for i in 0..n {
            let mut budget = Expr::new();
            for t in span.clone() {
                budget.add(energy[i], LpVar::Ratio(i, t));
            }
            budget.add(-harvest, LpVar::Panel(i));
            row(&mut out, &format!("budget_{i}_{d}"), &budget, "<=", 0.0);

            let mut night = Expr::new();
            for t in dusk + 1..span.end {
                night.add(energy[i], LpVar::Ratio(i, t));
            }
            if !night.0.is_empty() {
                night.add(-unit, LpVar::Battery(i));
                row(&mut out, &format!("night_{i}_{d}"), &night, "<=", 0.0);
            }
        }
    }

    out.push_str("Bounds\n");
    for i in 0..n {
        let _ = writeln!(out, " 0 <= {} <= {}", LpVar::Panel(i).name(), sc.panel_size_max);
        let _ = writeln!(out, " 0 <= {} <= {}", LpVar::Battery(i).name(), sc.battery_size_max);
    }
    let mut dark = vec![false; horizon];
    for t in dark_before_dawn {
        dark[t] = true;
    }
    for t in 0..horizon {
        for i in 0..n {
            let r = LpVar::Ratio(i, t).name();
            if dark[t] {
                let _ = writeln!(out, " {r} = 0");
            } else {
                let _ = writeln!(out, " 0 <= {r} <= 1");
            }
        }
        for i in 0..n {
            for j in (0..m).filter(|&j| !reachable(i, j)) {
                let _ = writeln!(out, " {} = 0", LpVar::Serve(i, j, t).name());
            }
        }
    }

    out.push_str("General\n");
    for i in 0..n {
        let _ = writeln!(out, " {} {}", LpVar::Panel(i).name(), LpVar::Battery(i).name());
    }
    out.push_str("Binary\n");
    for t in 0..horizon {
        name_lines(&mut out, (0..n).map(|i| LpVar::On(i, t)));
        for i in 0..n {
            name_lines(&mut out, (0..m).map(|j| LpVar::Serve(i, j, t)));
        }
    }
    out.push_str("End\n");
    Ok(out)
}
