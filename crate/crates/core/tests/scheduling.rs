mod common;

use common::{corpus, generated, with_caps, with_mode};
use gridsched_core::metrics::build_report;
use gridsched_core::model::{
    CapPolicy, DirectionMode, EvSpec, PresenceSchedule, PriceProfile, PriceSchedule,
    ScenarioConfig, SolverSettings, TimeGrid, UserType, Zone, ZoneSelection,
};
use gridsched_core::schedule::{build_model, check_schedule, solve_scenario, ScheduleError};
use gridsched_lp::{solve, SolverOptions};

fn cost(c: &ScenarioConfig) -> f64 {
    solve_scenario(c)
        .expect("corpus scenario is feasible")
        .total_cost
}

#[test]
fn every_corpus_solution_satisfies_the_constraints() {
    for (k, c) in corpus().iter().enumerate() {
        let s = solve_scenario(c).unwrap_or_else(|e| panic!("scenario {k}: {e}"));
        let v = check_schedule(c, &s, 1e-6);
        assert!(v.is_empty(), "scenario {k}: {v:?}");
        assert!(
            (s.total_cost - s.objective_value).abs() < 1e-6,
            "scenario {k}"
        );
    }
}

#[test]
fn unidirectional_charges_exactly_what_is_needed() {
    for c in corpus()
        .iter()
        .filter(|c| c.direction_mode == DirectionMode::UniDirectional)
    {
        let s = solve_scenario(c).unwrap();
        let dt = c.grid.dt_hours;
        let charged: f64 = s.power.iter().flatten().map(|p| p * dt).sum();
        let needed: f64 = c
            .fleet
            .iter()
            .enumerate()
            .map(|(i, ev)| {
                ev.target_energy_kwh - ev.initial_energy_kwh
                    + c.presence.driving_consumption[i].iter().sum::<f64>()
            })
            .sum();
        assert!((charged - needed).abs() < 1e-6, "{charged} vs {needed}");
        assert!(s.discharge_kw.iter().flatten().all(|&d| d == 0.0));
    }
}

#[test]
fn bidirectional_never_costs_more() {
    for c in corpus()
        .iter()
        .filter(|c| c.direction_mode == DirectionMode::UniDirectional)
    {
        let uni = cost(c);
        let v2g = cost(&with_mode(c, DirectionMode::Bidirectional));
        assert!(v2g <= uni + 1e-6, "{v2g} > {uni}");
    }
}

#[test]
fn tighter_caps_never_lower_cost() {
    let base = generated(4, 2, 7, PriceProfile::RealTime);
    for mode in [DirectionMode::UniDirectional, DirectionMode::Bidirectional] {
        for which in [
            ZoneSelection::All,
            ZoneSelection::Named(vec!["CBD".into()]),
            ZoneSelection::Named(vec!["Suburb".into()]),
        ] {
            let b = with_mode(&base, mode);
            let costs: Vec<f64> = [None, Some(0.6), Some(0.3), Some(0.0)]
                .into_iter()
                .map(|eta| cost(&with_caps(&b, eta, which.clone())))
                .collect();
            for w in costs.windows(2) {
                assert!(w[0] <= w[1] + 1e-6, "{mode:?} {which}: {costs:?}");
            }
        }
    }
}

#[test]
fn slack_caps_change_nothing() {
    let base = generated(4, 2, 8, PriceProfile::RetailToU);
    for mode in [DirectionMode::UniDirectional, DirectionMode::Bidirectional] {
        let b = with_mode(&base, mode);
        let free = cost(&b);
        let slack = cost(&with_caps(&b, Some(10.0), ZoneSelection::All));
        assert!((free - slack).abs() < 1e-6, "{free} vs {slack}");
    }
}

#[test]
fn strict_price_spread_never_overlaps() {
    // With discharge credited strictly below the charge price, charging and discharging in the
    // same interval always loses money, so the raw LP optimum must not do it.
    for seed in 0..4 {
        let mut c = generated(4, 2, 40 + seed, PriceProfile::RealTime);
        for row in &mut c.prices.discharge_price {
            for v in row.iter_mut() {
                *v *= 0.9;
            }
        }
        let (lp, map) = build_model(&c).unwrap();
        let sol = solve(&lp, &SolverOptions::default()).unwrap();
        let dis = map.discharge.as_ref().unwrap();
        for i in 0..c.fleet.len() {
            for t in 0..c.grid.interval_count {
                let (p, m) = (sol.x[map.charge[i][t].0], sol.x[dis[i][t].0]);
                assert!(
                    p <= 1e-9 || m <= 1e-9,
                    "seed {seed} ev {i} t {t}: {p} / {m}"
                );
            }
        }
    }
}

#[test]
fn metric_identities_hold_on_every_run() {
    for (k, c) in corpus().iter().enumerate() {
        let s = solve_scenario(c).unwrap();
        let r = build_report(&s, c).unwrap();
        let xi: f64 = r.zones.iter().map(|z| z.energy_ratio_pct).sum();
        assert!((xi - 100.0).abs() < 1e-6, "scenario {k}: Σξ = {xi}");
        let kappa: f64 = r.evs.iter().map(|e| e.cost).sum();
        assert!((kappa - r.total_cost).abs() < 1e-6, "scenario {k}");
        for e in &r.evs {
            assert!(
                (0.0..=1.0).contains(&e.discharged_charged_ratio),
                "scenario {k}: {e:?}"
            );
            if c.direction_mode == DirectionMode::UniDirectional {
                assert_eq!(e.discharged_charged_ratio, 0.0);
            }
        }
        for (z, zone) in c.zones.iter().enumerate() {
            // Recompute μ from raw arrays rather than the report's own profile.
            let mut peak_with = f64::NEG_INFINITY;
            for t in 0..c.grid.interval_count {
                let mut m = zone.local_demand[t];
                for i in 0..c.fleet.len() {
                    if c.presence.presence[i][z][t] {
                        m += s.charge_kw[i][t] - s.discharge_kw[i][t];
                    }
                }
                peak_with = peak_with.max(m);
            }
            let peak = zone
                .local_demand
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            let mu = 100.0 * peak_with / peak;
            assert!(
                (mu - r.zones[z].peak_ratio_pct).abs() < 1e-9,
                "scenario {k} zone {z}"
            );
            if let Some(p) = &c.cap_policy {
                if p.constrained_zones.resolve(&c.zones).unwrap().contains(&z) {
                    assert!(
                        mu <= 100.0 * (1.0 + p.eta) + 1e-6,
                        "scenario {k} zone {z}: μ = {mu}"
                    );
                }
            }
        }
    }
}

#[test]
fn cap_at_peak_blocks_charging_at_the_peak() {
    // The EV is plugged in only during the zone's peak interval and the cap leaves no room.
    let mut ev = EvSpec::new("late", UserType::DayWorker);
    ev.initial_energy_kwh = 24.0;
    ev.target_energy_kwh = 26.0;
    let mut c = ScenarioConfig {
        grid: TimeGrid::new(3, 0.5),
        zones: vec![Zone {
            id: "depot".into(),
            name: "depot".into(),
            kind: None,
            local_demand: vec![5.0, 10.0, 5.0],
            power_cap: None,
        }],
        prices: PriceSchedule {
            profile_kind: PriceProfile::RealTime,
            charge_price: vec![vec![0.2; 3]],
            discharge_price: vec![vec![0.2; 3]],
        },
        fleet: vec![ev],
        presence: PresenceSchedule {
            presence: vec![vec![vec![false, true, false]]],
            driving_consumption: vec![vec![0.0; 3]],
        },
        direction_mode: DirectionMode::Bidirectional,
        cap_policy: Some(CapPolicy {
            eta: 0.0,
            constrained_zones: ZoneSelection::All,
        }),
        currency: "AUD".into(),
        solver: SolverSettings::default(),
    };
    c.apply_cap_policy().unwrap();
    match solve_scenario(&c) {
        Err(ScheduleError::Infeasible { binding, .. }) => {
            assert_eq!(
                binding.first().map(String::as_str),
                Some("cap[depot,t=1]"),
                "{binding:?}"
            );
        }
        other => panic!("expected infeasibility, got {other:?}"),
    }
    c.cap_policy = Some(CapPolicy {
        eta: 0.4,
        constrained_zones: ZoneSelection::All,
    });
    c.apply_cap_policy().unwrap();
    assert!((cost(&c) - 0.4).abs() < 1e-9);
}

#[test]
fn solving_is_deterministic() {
    let a = generated(5, 2, 3, PriceProfile::RealTime);
    let b = generated(5, 2, 3, PriceProfile::RealTime);
    assert_eq!(a, b);
    let (s1, s2) = (solve_scenario(&a).unwrap(), solve_scenario(&b).unwrap());
    assert_eq!(s1, s2);
}
