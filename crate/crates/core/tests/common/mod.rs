#![allow(dead_code)]

use gridsched_core::generate::{generate_scenario, GeneratorConfig};
use gridsched_core::model::{
    CapPolicy, DirectionMode, EvSpec, PresenceSchedule, PriceProfile, PriceSchedule,
    ScenarioConfig, SolverSettings, TimeGrid, UserType, Zone, ZoneSelection,
};
use gridsched_testkit::charge::SingleEvCase;

/// Local demand used when turning a single-vehicle case into a scenario.
pub const BASE_LOAD: f64 = 10.0;
/// Cap standing in for "no cap" on intervals without headroom in a capped case.
const LOOSE_CAP: f64 = 1e6;

pub fn single_ev_config(case: &SingleEvCase) -> ScenarioConfig {
    let nt = case.intervals();
    let bidirectional = case.max_discharge_kw > 0.0;
    let mut ev = EvSpec::new("ev", UserType::DayWorker);
    ev.battery_capacity_kwh = case.capacity;
    ev.initial_energy_kwh = case.initial;
    ev.target_energy_kwh = case.target;
    ev.max_charge_kw = case.max_charge_kw;
    ev.max_discharge_kw = -case.max_discharge_kw;
    let capped = case.headroom.iter().any(Option::is_some);
    ScenarioConfig {
        grid: TimeGrid::new(nt, case.dt),
        zones: vec![Zone {
            id: "z".into(),
            name: "z".into(),
            kind: None,
            local_demand: vec![BASE_LOAD; nt],
            power_cap: capped.then(|| {
                case.headroom
                    .iter()
                    .map(|h| h.map_or(LOOSE_CAP, |h| BASE_LOAD + h))
                    .collect()
            }),
        }],
        prices: PriceSchedule {
            profile_kind: PriceProfile::RealTime,
            charge_price: vec![case.charge_price.clone()],
            discharge_price: vec![case.discharge_price.clone()],
        },
        fleet: vec![ev],
        presence: PresenceSchedule {
            presence: vec![vec![case.connected.clone()]],
            driving_consumption: vec![case.driving.clone()],
        },
        direction_mode: if bidirectional {
            DirectionMode::Bidirectional
        } else {
            DirectionMode::UniDirectional
        },
        cap_policy: None,
        currency: "AUD".into(),
        solver: SolverSettings::default(),
    }
}

/// Generated multi-zone scenario on a short grid.
pub fn generated(fleet: usize, days: usize, seed: u64, profile: PriceProfile) -> ScenarioConfig {
    let mut g = GeneratorConfig::with_defaults(fleet, seed);
    g.grid = TimeGrid::new(48 * days, 0.5);
    g.price_profile = profile;
    generate_scenario(&g).expect("generator succeeds").scenario
}

pub fn with_caps(base: &ScenarioConfig, eta: Option<f64>, which: ZoneSelection) -> ScenarioConfig {
    let mut c = base.clone();
    c.cap_policy = eta.map(|eta| CapPolicy {
        eta,
        constrained_zones: which,
    });
    for z in &mut c.zones {
        z.power_cap = None;
    }
    c.apply_cap_policy().expect("valid policy");
    c
}

pub fn with_mode(base: &ScenarioConfig, mode: DirectionMode) -> ScenarioConfig {
    let mut c = base.clone();
    c.direction_mode = mode;
    c
}

/// Scenarios exercised by the corpus-wide property checks.
pub fn corpus() -> Vec<ScenarioConfig> {
    let mut out = Vec::new();
    for (k, profile) in [
        PriceProfile::RealTime,
        PriceProfile::NormalizedDemand,
        PriceProfile::RetailToU,
    ]
    .into_iter()
    .enumerate()
    {
        let base = generated(4, 2, 100 + k as u64, profile);
        for mode in [DirectionMode::UniDirectional, DirectionMode::Bidirectional] {
            let b = with_mode(&base, mode);
            for eta in [None, Some(0.6), Some(0.3), Some(0.0)] {
                out.push(with_caps(&b, eta, ZoneSelection::All));
            }
            out.push(with_caps(
                &b,
                Some(0.0),
                ZoneSelection::Named(vec!["CBD".into()]),
            ));
        }
    }
    out
}
