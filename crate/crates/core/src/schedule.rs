//! Translation of a scenario into a linear program and of its solution back into schedules.
//!
//! Signed power is split as `p = p⁺ − p⁻` with both parts nonnegative. Charging is priced at
//! `λ(z,t)` and discharging credited at `η(z,t)`; with `η ≤ λ` this split is exact, because an
//! optimum never pays to charge and discharge in the same interval. Energy states `e(i,t)` are
//! explicit variables tied together by one equality row per interval.

use gridsched_lp::{
    solve, LinearProgram, LpSolution, RowId, RowSense, SolveError, SolverOptions, Status, VarId,
};
use serde::Serialize;
use thiserror::Error;

use crate::model::{validate, DirectionMode, ScenarioConfig, ValidationReport};

/// Below this a split power component is treated as zero.
const ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("scenario is invalid:\n{}", .0.errors().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Invalid(ValidationReport),
    #[error("discharge price {discharge} exceeds charge price {charge} in zone `{zone}` at t={interval}")]
    NonconvexPrice {
        zone: String,
        interval: usize,
        charge: f64,
        discharge: f64,
    },
    #[error("scenario is infeasible; binding constraints: {}", list_rows(.binding))]
    Infeasible { binding: Vec<String>, residual: f64 },
    #[error("cannot extract a schedule from a {0:?} solution")]
    NotOptimal(Status),
    #[error("solver failure: {0}")]
    Solver(#[from] SolveError),
}

/// Shown row names in an infeasibility message; the full list stays on the error.
const SHOWN_ROWS: usize = 8;

fn list_rows(rows: &[String]) -> String {
    let mut text = rows
        .iter()
        .take(SHOWN_ROWS)
        .cloned()
        .collect::<Vec<_>>()
        .join(", ");
    if rows.len() > SHOWN_ROWS {
        text.push_str(&format!(" and {} more", rows.len() - SHOWN_ROWS));
    }
    text
}

/// Row of the scheduling LP, in terms of the scenario.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    Recurrence { ev: usize, interval: usize },
    Target { ev: usize },
    Cap { zone: usize, interval: usize },
}

/// Where each scenario quantity lives in the LP.
#[derive(Clone, Debug, PartialEq)]
pub struct VariableMap {
    /// `p⁺(i,t)`, indexed `[ev][interval]`.
    pub charge: Vec<Vec<VarId>>,
    /// `p⁻(i,t)`; `None` in unidirectional mode, where the variable does not exist.
    pub discharge: Option<Vec<Vec<VarId>>>,
    /// `e(i,t)`, energy at the end of interval `t`.
    pub energy: Vec<Vec<VarId>>,
    /// What every LP row encodes, indexed by row.
    pub rows: Vec<ConstraintKind>,
}

impl VariableMap {
    pub fn row_kind(&self, row: RowId) -> &ConstraintKind {
        &self.rows[row.0]
    }
}

fn check_prices(config: &ScenarioConfig) -> Result<(), ScheduleError> {
    let p = &config.prices;
    for (z, zone) in config.zones.iter().enumerate() {
        for t in 0..config.grid.interval_count {
            let (charge, discharge) = (p.charge_price[z][t], p.discharge_price[z][t]);
            if discharge > charge {
                return Err(ScheduleError::NonconvexPrice {
                    zone: zone.id.clone(),
                    interval: t,
                    charge,
                    discharge,
                });
            }
        }
    }
    Ok(())
}

/// Builds the cost-minimizing LP for a scenario.
///
/// Variables per EV and interval: `p⁺`, then `p⁻` (bidirectional mode only), then `e`. Rows:
/// per EV the energy recurrence for every interval followed by the target row, then one cap row
/// per zone and interval with a finite cap. Zones without a cap contribute no rows.
pub fn build_model(config: &ScenarioConfig) -> Result<(LinearProgram, VariableMap), ScheduleError> {
    let report = validate(config);
    if !report.is_valid() {
        // Surface the price conflict with its dedicated error when that is the only problem.
        check_prices(config)?;
        return Err(ScheduleError::Invalid(report));
    }
    check_prices(config)?;

    let grid = &config.grid;
    let (nt, dt) = (grid.interval_count, grid.dt_hours);
    let bidirectional = config.direction_mode == DirectionMode::Bidirectional;
    let presence = &config.presence;
    let mut lp = LinearProgram::new();
    let mut charge = Vec::with_capacity(config.fleet.len());
    let mut discharge = bidirectional.then(Vec::new);
    let mut energy = Vec::with_capacity(config.fleet.len());
    let mut rows = Vec::new();

    for (i, ev) in config.fleet.iter().enumerate() {
        let mut pc = Vec::with_capacity(nt);
        let mut pd = Vec::with_capacity(nt);
        let mut en = Vec::with_capacity(nt);
        let max_dis = -config.effective_max_discharge(i);
        for t in 0..nt {
            let zone = presence.connected_zone(i, t);
            let (lambda, eta, on) = match zone {
                Some(z) => (
                    config.prices.charge_price[z][t],
                    config.prices.discharge_price[z][t],
                    1.0,
                ),
                None => (0.0, 0.0, 0.0),
            };
            pc.push(lp.add_named_var(
                format!("p+[{},t={t}]", ev.id),
                lambda * dt,
                0.0,
                ev.max_charge_kw * on,
            ));
            if bidirectional {
                pd.push(lp.add_named_var(
                    format!("p-[{},t={t}]", ev.id),
                    -eta * dt,
                    0.0,
                    max_dis * on,
                ));
            }
            en.push(lp.add_named_var(
                format!("e[{},t={t}]", ev.id),
                0.0,
                0.0,
                ev.battery_capacity_kwh,
            ));
        }
        for t in 0..nt {
            // e(t) − e(t−1) − Δt·p⁺ + Δt·p⁻ = −d(t), with e(−1) = e_ini moved to the right.
            let mut coeffs = vec![(en[t], 1.0)];
            if t > 0 {
                coeffs.push((en[t - 1], -1.0));
            }
            coeffs.push((pc[t], -dt));
            if bidirectional {
                coeffs.push((pd[t], dt));
            }
            let mut rhs = -presence.driving_consumption[i][t];
            if t == 0 {
                rhs += ev.initial_energy_kwh;
            }
            lp.add_named_row(
                format!("recurrence[{},t={t}]", ev.id),
                coeffs,
                RowSense::Eq,
                rhs,
            );
            rows.push(ConstraintKind::Recurrence { ev: i, interval: t });
        }
        let mut coeffs = Vec::with_capacity(2 * nt);
        for t in 0..nt {
            coeffs.push((pc[t], dt));
            if bidirectional {
                coeffs.push((pd[t], -dt));
            }
        }
        let driving: f64 = presence.driving_consumption[i].iter().sum();
        let rhs = ev.target_energy_kwh - ev.initial_energy_kwh + driving;
        lp.add_named_row(format!("target[{}]", ev.id), coeffs, RowSense::Ge, rhs);
        rows.push(ConstraintKind::Target { ev: i });
        charge.push(pc);
        if let Some(d) = discharge.as_mut() {
            d.push(pd);
        }
        energy.push(en);
    }

    for (z, zone) in config.zones.iter().enumerate() {
        for t in 0..nt {
            let Some(cap) = zone.cap(t) else { continue };
            let mut coeffs = Vec::new();
            for i in 0..config.fleet.len() {
                if presence.presence[i][z][t] {
                    coeffs.push((charge[i][t], 1.0));
                    if let Some(d) = &discharge {
                        coeffs.push((d[i][t], -1.0));
                    }
                }
            }
            let rhs = cap - zone.local_demand[t];
            lp.add_named_row(format!("cap[{},t={t}]", zone.id), coeffs, RowSense::Le, rhs);
            rows.push(ConstraintKind::Cap {
                zone: z,
                interval: t,
            });
        }
    }
    Ok((
        lp,
        VariableMap {
            charge,
            discharge,
            energy,
            rows,
        },
    ))
}

/// An interval where the solver returned both charge and discharge above tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Overlap {
    pub ev: usize,
    pub interval: usize,
    pub charge_kw: f64,
    pub discharge_kw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChargeSchedule {
    /// Signed power `p(i,t)` in kW, indexed `[ev][interval]`.
    pub power: Vec<Vec<f64>>,
    /// Energy `e(i,t)` at the end of each interval, kWh.
    pub energy: Vec<Vec<f64>>,
    /// Charging part of `power` after cancelling simultaneous charge and discharge.
    pub charge_kw: Vec<Vec<f64>>,
    /// Discharge magnitude, same convention.
    pub discharge_kw: Vec<Vec<f64>>,
    pub per_ev_cost: Vec<f64>,
    pub total_cost: f64,
    pub objective_value: f64,
    pub overlaps: Vec<Overlap>,
    pub iterations: usize,
}

fn snap(v: f64) -> f64 {
    if v.abs() < ZERO_TOL {
        0.0
    } else {
        v
    }
}

/// Maps an optimal LP solution back to per-EV power, energy and cost.
///
/// Overlapping charge and discharge in one interval is cancelled down to its net; at matched
/// prices this changes neither the net power nor the cost. Each case is recorded in
/// [`ChargeSchedule::overlaps`].
pub fn extract_schedule(
    solution: &LpSolution,
    map: &VariableMap,
    config: &ScenarioConfig,
) -> Result<ChargeSchedule, ScheduleError> {
    if solution.status != Status::Optimal {
        return Err(ScheduleError::NotOptimal(solution.status));
    }
    let nt = config.grid.interval_count;
    let dt = config.grid.dt_hours;
    let x = &solution.x;
    let mut schedule = ChargeSchedule {
        power: vec![],
        energy: vec![],
        charge_kw: vec![],
        discharge_kw: vec![],
        per_ev_cost: vec![],
        total_cost: 0.0,
        objective_value: solution.objective_value,
        overlaps: vec![],
        iterations: solution.iterations,
    };
    for i in 0..config.fleet.len() {
        let (mut pw, mut ch, mut dis) = (vec![0.0; nt], vec![0.0; nt], vec![0.0; nt]);
        let mut cost = 0.0;
        for t in 0..nt {
            let plus = x[map.charge[i][t].0].max(0.0);
            let minus = map
                .discharge
                .as_ref()
                .map_or(0.0, |d| x[d[i][t].0].max(0.0));
            if plus > 1e-6 && minus > 1e-6 {
                log::debug!(
                    "EV {} t={t}: simultaneous charge {plus} kW and discharge {minus} kW cancelled",
                    config.fleet[i].id
                );
                schedule.overlaps.push(Overlap {
                    ev: i,
                    interval: t,
                    charge_kw: plus,
                    discharge_kw: minus,
                });
            }
            let common = plus.min(minus);
            ch[t] = snap(plus - common);
            dis[t] = snap(minus - common);
            pw[t] = ch[t] - dis[t];
            if let Some(z) = config.presence.connected_zone(i, t) {
                cost += dt
                    * (config.prices.charge_price[z][t] * ch[t]
                        - config.prices.discharge_price[z][t] * dis[t]);
            }
        }
        schedule
            .energy
            .push(map.energy[i].iter().map(|v| snap(x[v.0])).collect());
        schedule.power.push(pw);
        schedule.charge_kw.push(ch);
        schedule.discharge_kw.push(dis);
        schedule.per_ev_cost.push(cost);
    }
    if !schedule.overlaps.is_empty() {
        log::warn!(
            "cancelled simultaneous charge and discharge in {} EV-intervals",
            schedule.overlaps.len()
        );
    }
    schedule.total_cost = schedule.per_ev_cost.iter().sum();
    Ok(schedule)
}

pub fn solver_options(config: &ScenarioConfig) -> SolverOptions {
    SolverOptions {
        tol_feas: config.solver.tol_feas,
        tol_opt: config.solver.tol_opt,
        ..SolverOptions::default()
    }
}

/// Orders certificate rows for reporting: cap rows first, then targets, then the rest.
fn binding_rows(lp: &LinearProgram, map: &VariableMap, rows: &[RowId]) -> Vec<String> {
    let rank = |r: &RowId| match map.row_kind(*r) {
        ConstraintKind::Cap { .. } => 0,
        ConstraintKind::Target { .. } => 1,
        ConstraintKind::Recurrence { .. } => 2,
    };
    let mut sorted = rows.to_vec();
    sorted.sort_by_key(|r| (rank(r), r.0));
    sorted.iter().map(|&r| lp.row_name(r)).collect()
}

/// Builds, solves and extracts in one step.
pub fn solve_scenario(config: &ScenarioConfig) -> Result<ChargeSchedule, ScheduleError> {
    let (lp, map) = build_model(config)?;
    let solution = solve(&lp, &solver_options(config))?;
    interpret(&lp, &map, &solution, config)
}

/// Turns a finished solve into a schedule or a diagnostic error.
pub fn interpret(
    lp: &LinearProgram,
    map: &VariableMap,
    solution: &LpSolution,
    config: &ScenarioConfig,
) -> Result<ChargeSchedule, ScheduleError> {
    match solution.status {
        Status::Optimal => extract_schedule(solution, map, config),
        Status::Infeasible => {
            let info = solution.infeasibility.as_ref();
            let mut rows = info.map(|i| i.certificate_rows.clone()).unwrap_or_default();
            if rows.is_empty() {
                rows = info.map(|i| i.violated_rows.clone()).unwrap_or_default();
            }
            Err(ScheduleError::Infeasible {
                binding: binding_rows(lp, map, &rows),
                residual: info.map_or(f64::NAN, |i| i.residual),
            })
        }
        // Every variable is boxed, so this means the solver went wrong.
        Status::Unbounded => Err(ScheduleError::Solver(SolveError::NumericalFailure {
            message: "scheduling model reported unbounded".into(),
            iterations: solution.iterations,
            log: vec![],
        })),
    }
}

/// A constraint the schedule breaks, found by [`check_schedule`].
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub constraint: String,
    pub amount: f64,
}

/// Re-evaluates every scheduling constraint from the schedule and scenario alone: power limits,
/// zero power while disconnected, the energy recurrence, the battery box, zone caps and targets.
pub fn check_schedule(config: &ScenarioConfig, s: &ChargeSchedule, tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut flag = |constraint: String, amount: f64| {
        if amount > tol {
            out.push(Violation { constraint, amount });
        }
    };
    let nt = config.grid.interval_count;
    let dt = config.grid.dt_hours;
    for (i, ev) in config.fleet.iter().enumerate() {
        let min_power = config.effective_max_discharge(i);
        let mut prev = ev.initial_energy_kwh;
        for t in 0..nt {
            let p = s.power[i][t];
            let e = s.energy[i][t];
            let d = config.presence.driving_consumption[i][t];
            if config.presence.connected_zone(i, t).is_some() {
                flag(
                    format!("power upper bound [{}, t={t}]", ev.id),
                    p - ev.max_charge_kw,
                );
                flag(
                    format!("power lower bound [{}, t={t}]", ev.id),
                    min_power - p,
                );
            } else {
                flag(format!("disconnected power [{}, t={t}]", ev.id), p.abs());
            }
            flag(
                format!("recurrence [{}, t={t}]", ev.id),
                (e - (prev + p * dt - d)).abs(),
            );
            flag(format!("battery empty [{}, t={t}]", ev.id), -e);
            flag(
                format!("battery capacity [{}, t={t}]", ev.id),
                e - ev.battery_capacity_kwh,
            );
            prev = e;
        }
        let delivered: f64 = (0..nt)
            .map(|t| s.power[i][t] * dt - config.presence.driving_consumption[i][t])
            .sum();
        flag(
            format!("target [{}]", ev.id),
            ev.target_energy_kwh - (ev.initial_energy_kwh + delivered),
        );
    }
    for (z, zone) in config.zones.iter().enumerate() {
        for t in 0..nt {
            let Some(cap) = zone.cap(t) else { continue };
            let load: f64 = (0..config.fleet.len())
                .filter(|&i| config.presence.presence[i][z][t])
                .map(|i| s.power[i][t])
                .sum();
            flag(
                format!("zone cap [{}, t={t}]", zone.id),
                zone.local_demand[t] + load - cap,
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        EvSpec, PresenceSchedule, PriceProfile, PriceSchedule, SolverSettings, TimeGrid, UserType,
        Zone,
    };

    /// One EV in one zone, always plugged in, 24→`target` kWh.
    fn single(
        prices: &[f64],
        target: f64,
        mode: DirectionMode,
        cap: Option<f64>,
    ) -> ScenarioConfig {
        let nt = prices.len();
        let mut ev = EvSpec::new("ev", UserType::DayWorker);
        ev.target_energy_kwh = target;
        ScenarioConfig {
            grid: TimeGrid::new(nt, 0.5),
            zones: vec![Zone {
                id: "z".into(),
                name: "z".into(),
                kind: None,
                local_demand: vec![10.0; nt],
                power_cap: cap.map(|c| vec![c; nt]),
            }],
            prices: PriceSchedule {
                profile_kind: PriceProfile::RealTime,
                charge_price: vec![prices.to_vec()],
                discharge_price: vec![prices.to_vec()],
            },
            fleet: vec![ev],
            presence: PresenceSchedule {
                presence: vec![vec![vec![true; nt]]],
                driving_consumption: vec![vec![0.0; nt]],
            },
            direction_mode: mode,
            cap_policy: None,
            currency: "AUD".into(),
            solver: SolverSettings::default(),
        }
    }

    #[test]
    fn uni_model_dimensions() {
        let c = single(&[0.2, 0.3], 30.0, DirectionMode::UniDirectional, None);
        let (lp, map) = build_model(&c).unwrap();
        assert_eq!(lp.num_vars(), 4);
        assert_eq!(lp.num_rows(), 3);
        assert!(map.discharge.is_none());
        for t in 0..2 {
            assert_eq!(lp.bounds(map.charge[0][t]), (0.0, 7.4));
            assert_eq!(lp.bounds(map.energy[0][t]), (0.0, 60.0));
        }
        let rows = |pred: fn(&ConstraintKind) -> bool| map.rows.iter().filter(|k| pred(k)).count();
        assert_eq!(rows(|k| matches!(k, ConstraintKind::Recurrence { .. })), 2);
        assert_eq!(rows(|k| matches!(k, ConstraintKind::Target { .. })), 1);
        assert_eq!(rows(|k| matches!(k, ConstraintKind::Cap { .. })), 0);
    }

    #[test]
    fn bidirectional_capped_model_dimensions() {
        let c = single(&[0.2, 0.3], 30.0, DirectionMode::Bidirectional, Some(50.0));
        let (lp, map) = build_model(&c).unwrap();
        assert_eq!(lp.num_vars(), 6);
        assert_eq!(lp.num_rows(), 5);
        let d = map.discharge.as_ref().unwrap();
        assert_eq!(lp.bounds(d[0][1]), (0.0, 7.4));
    }

    #[test]
    fn disconnected_interval_has_zero_power_bounds() {
        let mut c = single(&[0.2, 0.3, 0.1], 30.0, DirectionMode::Bidirectional, None);
        c.presence.presence[0][0][1] = false;
        let (lp, map) = build_model(&c).unwrap();
        assert_eq!(lp.bounds(map.charge[0][1]), (0.0, 0.0));
        assert_eq!(lp.bounds(map.discharge.as_ref().unwrap()[0][1]), (0.0, 0.0));
    }

    #[test]
    fn uni_mode_ignores_the_discharge_limit() {
        let c = single(&[0.2, 0.3], 30.0, DirectionMode::UniDirectional, None);
        assert_eq!(c.fleet[0].max_discharge_kw, -7.4);
        let s = solve_scenario(&c).unwrap();
        assert!(s.power[0].iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn charges_in_the_cheaper_interval() {
        let c = single(&[1.0, 2.0], 27.0, DirectionMode::UniDirectional, None);
        let s = solve_scenario(&c).unwrap();
        assert!((s.power[0][0] - 6.0).abs() < 1e-9);
        assert!(s.power[0][1].abs() < 1e-9);
        assert!((s.total_cost - 3.0).abs() < 1e-9);
        assert!((s.total_cost - s.objective_value).abs() < 1e-9);
    }

    #[test]
    fn nothing_needed_costs_nothing() {
        let c = single(&[0.5, 0.7, 0.2], 24.0, DirectionMode::UniDirectional, None);
        let s = solve_scenario(&c).unwrap();
        assert!(s.power[0].iter().all(|&p| p == 0.0));
        assert_eq!(s.total_cost, 0.0);
    }

    #[test]
    fn arbitrage_at_full_power() {
        let c = single(&[1.0, 3.0], 24.0, DirectionMode::Bidirectional, None);
        let s = solve_scenario(&c).unwrap();
        assert!((s.power[0][0] - 7.4).abs() < 1e-9);
        assert!((s.power[0][1] + 7.4).abs() < 1e-9);
        assert!((s.total_cost + 7.4).abs() < 1e-9);
    }

    #[test]
    fn nonconvex_prices_are_rejected() {
        let mut c = single(&[1.0, 3.0], 24.0, DirectionMode::Bidirectional, None);
        c.prices.discharge_price[0][1] = 3.5;
        assert!(matches!(
            build_model(&c),
            Err(ScheduleError::NonconvexPrice { interval: 1, .. })
        ));
    }

    #[test]
    fn infeasible_cap_is_named() {
        // Local demand already sits at the cap, and the EV needs charge.
        let c = single(&[1.0, 1.0], 30.0, DirectionMode::UniDirectional, Some(10.0));
        match solve_scenario(&c) {
            Err(ScheduleError::Infeasible { binding, .. }) => {
                assert!(binding[0].starts_with("cap[z,"), "{binding:?}");
                assert!(binding.iter().any(|b| b == "target[ev]"), "{binding:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shortfall_names_the_ev() {
        let mut c = single(&[1.0, 1.0], 40.0, DirectionMode::UniDirectional, None);
        c.fleet[0].id = "slow".into();
        match solve_scenario(&c) {
            Err(ScheduleError::Infeasible { binding, .. }) => {
                assert_eq!(binding[0], "target[slow]");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn checker_catches_a_tampered_schedule() {
        let c = single(
            &[1.0, 2.0, 1.5],
            30.0,
            DirectionMode::UniDirectional,
            Some(14.0),
        );
        let mut s = solve_scenario(&c).unwrap();
        assert!(check_schedule(&c, &s, 1e-6).is_empty());
        s.power[0][0] += 0.5;
        let v = check_schedule(&c, &s, 1e-6);
        assert!(v.iter().any(|v| v.constraint.starts_with("recurrence")));
        assert!(v.iter().any(|v| v.constraint.starts_with("zone cap")));
    }

    #[test]
    fn extraction_requires_optimal_status() {
        let c = single(&[1.0, 1.0], 40.0, DirectionMode::UniDirectional, None);
        let (lp, map) = build_model(&c).unwrap();
        let sol = solve(&lp, &solver_options(&c)).unwrap();
        assert!(matches!(
            extract_schedule(&sol, &map, &c),
            Err(ScheduleError::NotOptimal(Status::Infeasible))
        ));
    }
}
