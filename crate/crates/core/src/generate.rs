//! Synthetic fleets: user types, destination zones, weekly itineraries and the presence and
//! driving-consumption matrices derived from them.
//!
//! Every EV draws from its own ChaCha8 stream keyed by `(ev index, purpose, attempt)`, so
//! growing the fleet never changes the EVs already generated.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    is_weekend, CapPolicy, DirectionMode, EvSpec, ModelError, PresenceSchedule, PriceProfile,
    ScenarioConfig, SolverSettings, TimeGrid, UserType, Zone, ZoneKind,
};
use crate::profiles::{bundled_prices, synthetic_demand, ProfileError};

const PURPOSE_USER_TYPE: u64 = 0;
const PURPOSE_LOCATIONS: u64 = 1;
const PURPOSE_ITINERARY: u64 = 2;
const MAX_ATTEMPTS: u64 = 64;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid generator config: `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("grid covers {hours} h; itineraries need at least one full day")]
    GridTooShort { hours: f64 },
    #[error("EV {ev}: no itinerary in {attempts} attempts keeps the battery feasible")]
    Infeasible { ev: usize, attempts: u64 },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> GeneratorError {
    GeneratorError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DestinationKind {
    Residential,
    Work,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserTypeMix {
    #[serde(rename = "DayWorker", default)]
    pub day_worker: f64,
    #[serde(rename = "Logistics", default)]
    pub logistics: f64,
    #[serde(rename = "Taxi", default)]
    pub taxi: f64,
}

impl UserTypeMix {
    fn weights(&self) -> [f64; 3] {
        [self.day_worker, self.logistics, self.taxi]
    }
}

/// Share of each destination kind falling in each zone, one entry per zone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DestinationDistribution {
    #[serde(rename = "Residential")]
    pub residential: Vec<f64>,
    #[serde(rename = "Work")]
    pub work: Vec<f64>,
    #[serde(rename = "Other")]
    pub other: Vec<f64>,
}

impl DestinationDistribution {
    /// Residential 10/80/10, work 70/10/20, other 30/40/30 over CBD, Suburb, Rural.
    pub fn three_zone() -> Self {
        Self {
            residential: vec![0.1, 0.8, 0.1],
            work: vec![0.7, 0.1, 0.2],
            other: vec![0.3, 0.4, 0.3],
        }
    }

    pub fn row(&self, kind: DestinationKind) -> &[f64] {
        match kind {
            DestinationKind::Residential => &self.residential,
            DestinationKind::Work => &self.work,
            DestinationKind::Other => &self.other,
        }
    }
}

/// Within-zone 1.0 kWh per interval, CBD–Suburb 2.5, Suburb–Rural 3.0, CBD–Rural 4.0.
pub fn default_consumption_matrix() -> Vec<Vec<f64>> {
    vec![
        vec![1.0, 2.5, 4.0],
        vec![2.5, 1.0, 3.0],
        vec![4.0, 3.0, 1.0],
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneSpec {
    pub id: String,
    pub name: String,
    pub kind: ZoneKind,
    /// Weekly peak of the bundled demand shape, kW.
    pub peak_kw: f64,
    /// Explicit demand series, used instead of the bundled shape when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_demand: Option<Vec<f64>>,
}

pub fn default_zones() -> Vec<ZoneSpec> {
    [
        (ZoneKind::Cbd, 60.0),
        (ZoneKind::Suburb, 45.0),
        (ZoneKind::Rural, 25.0),
    ]
    .into_iter()
    .map(|(kind, peak_kw)| ZoneSpec {
        id: kind.to_string(),
        name: kind.to_string(),
        kind,
        peak_kw,
        local_demand: None,
    })
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvTemplate {
    pub battery_capacity_kwh: f64,
    pub initial_energy_kwh: f64,
    pub target_energy_kwh: f64,
    pub max_charge_kw: f64,
    pub max_discharge_kw: f64,
}

impl Default for EvTemplate {
    fn default() -> Self {
        let ev = EvSpec::new("", UserType::DayWorker);
        Self {
            battery_capacity_kwh: ev.battery_capacity_kwh,
            initial_energy_kwh: ev.initial_energy_kwh,
            target_energy_kwh: ev.target_energy_kwh,
            max_charge_kw: ev.max_charge_kw,
            max_discharge_kw: ev.max_discharge_kw,
        }
    }
}

fn default_price_profile() -> PriceProfile {
    PriceProfile::RealTime
}
fn default_direction() -> DirectionMode {
    DirectionMode::Bidirectional
}
fn default_currency() -> String {
    "AUD".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub fleet_size: usize,
    pub user_type_mix: UserTypeMix,
    pub destination_distribution: DestinationDistribution,
    /// kWh consumed per travel interval, indexed `[from zone][to zone]`.
    pub consumption_matrix: Vec<Vec<f64>>,
    pub rng_seed: u64,
    #[serde(default)]
    pub grid: TimeGrid,
    #[serde(default = "default_zones")]
    pub zones: Vec<ZoneSpec>,
    #[serde(default)]
    pub ev: EvTemplate,
    #[serde(default = "default_price_profile")]
    pub price_profile: PriceProfile,
    #[serde(default = "default_direction")]
    pub direction_mode: DirectionMode,
    #[serde(default)]
    pub cap_policy: Option<CapPolicy>,
    #[serde(default = "default_currency")]
    pub currency: String,
}

impl GeneratorConfig {
    /// Three bundled zones, destination table, default consumption matrix and a mixed fleet.
    pub fn with_defaults(fleet_size: usize, rng_seed: u64) -> Self {
        Self {
            fleet_size,
            user_type_mix: UserTypeMix {
                day_worker: 0.6,
                logistics: 0.2,
                taxi: 0.2,
            },
            destination_distribution: DestinationDistribution::three_zone(),
            consumption_matrix: default_consumption_matrix(),
            rng_seed,
            grid: TimeGrid::default(),
            zones: default_zones(),
            ev: EvTemplate::default(),
            price_profile: PriceProfile::RealTime,
            direction_mode: DirectionMode::Bidirectional,
            cap_policy: None,
            currency: default_currency(),
        }
    }

    /// Field-level checks; the first problem found is returned.
    pub fn check(&self) -> Result<(), GeneratorError> {
        let nz = self.zones.len();
        if self.fleet_size == 0 {
            return Err(invalid("fleet_size", "must be positive"));
        }
        if nz == 0 {
            return Err(invalid("zones", "at least one zone is required"));
        }
        let g = &self.grid;
        if g.interval_count == 0 || !(g.dt_hours > 0.0 && g.dt_hours.is_finite()) {
            return Err(invalid(
                "grid",
                "needs a positive interval count and duration",
            ));
        }
        let mix = self.user_type_mix.weights();
        if mix.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("user_type_mix", "fractions must be nonnegative"));
        }
        if (mix.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid("user_type_mix", "fractions must sum to 1"));
        }
        for kind in [
            DestinationKind::Residential,
            DestinationKind::Work,
            DestinationKind::Other,
        ] {
            let field = format!("destination_distribution.{kind:?}");
            let row = self.destination_distribution.row(kind);
            if row.len() != nz {
                return Err(invalid(
                    field,
                    format!("expected {nz} entries, found {}", row.len()),
                ));
            }
            if row.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(invalid(field, "fractions must be nonnegative"));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(invalid(field, "fractions must sum to 1"));
            }
        }
        let m = &self.consumption_matrix;
        if m.len() != nz || m.iter().any(|r| r.len() != nz) {
            return Err(invalid(
                "consumption_matrix",
                format!("must be {nz} × {nz}"),
            ));
        }
        for a in 0..nz {
            for b in 0..nz {
                if !(m[a][b].is_finite() && m[a][b] >= 0.0) {
                    return Err(invalid("consumption_matrix", "entries must be nonnegative"));
                }
                if m[a][b] != m[b][a] {
                    return Err(invalid("consumption_matrix", "must be symmetric"));
                }
            }
        }
        for (k, z) in self.zones.iter().enumerate() {
            if let Some(d) = &z.local_demand {
                if d.len() != g.interval_count {
                    return Err(invalid(
                        format!("zones[{k}].local_demand"),
                        "length must match the grid",
                    ));
                }
            } else if !(z.peak_kw.is_finite() && z.peak_kw > 0.0) {
                return Err(invalid(format!("zones[{k}].peak_kw"), "must be positive"));
            }
        }
        let ev = &self.ev;
        if !(0.0..=ev.battery_capacity_kwh).contains(&ev.initial_energy_kwh)
            || !(0.0..=ev.battery_capacity_kwh).contains(&ev.target_energy_kwh)
        {
            return Err(invalid(
                "ev",
                "initial and target energy must lie within the battery capacity",
            ));
        }
        if ev.max_charge_kw <= 0.0 || ev.max_discharge_kw > 0.0 {
            return Err(invalid(
                "ev",
                "needs max_charge_kw > 0 and max_discharge_kw <= 0",
            ));
        }
        Ok(())
    }
}

fn stream(seed: u64, ev: usize, purpose: u64, attempt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((ev as u64) << 16) | (purpose << 8) | attempt);
    rng
}

fn sample_index(rng: &mut impl Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    // Rounding can leave `u` a hair above the last partial sum.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Zones of an EV's three destination kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Locations {
    pub residential: usize,
    pub work: usize,
    pub other: usize,
}

impl Locations {
    pub fn zone(&self, kind: DestinationKind) -> usize {
        match kind {
            DestinationKind::Residential => self.residential,
            DestinationKind::Work => self.work,
            DestinationKind::Other => self.other,
        }
    }
}

pub fn user_types(config: &GeneratorConfig) -> Vec<UserType> {
    let weights = config.user_type_mix.weights();
    (0..config.fleet_size)
        .map(|i| {
            let mut rng = stream(config.rng_seed, i, PURPOSE_USER_TYPE, 0);
            UserType::ALL[sample_index(&mut rng, &weights)]
        })
        .collect()
}

/// Draws each EV's residential, work and other zone independently from the destination table.
pub fn assign_locations(config: &GeneratorConfig) -> Vec<Locations> {
    let d = &config.destination_distribution;
    (0..config.fleet_size)
        .map(|i| {
            let mut rng = stream(config.rng_seed, i, PURPOSE_LOCATIONS, 0);
            Locations {
                residential: sample_index(&mut rng, &d.residential),
                work: sample_index(&mut rng, &d.work),
                other: sample_index(&mut rng, &d.other),
            }
        })
        .collect()
}

/// What an EV does while parked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Place {
    Residential,
    Work,
    Other,
    /// Short delivery stop.
    Stop,
}

/// A parked stay over intervals `arrive..depart`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leg {
    pub place: Place,
    pub zone: usize,
    pub arrive: usize,
    pub depart: usize,
}

/// Parked legs in time order; the EV drives between consecutive legs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Itinerary {
    pub ev_id: String,
    pub legs: Vec<Leg>,
}

impl Itinerary {
    /// Checks ordering, grid bounds and that the EV starts and ends at home.
    pub fn check(&self, grid: &TimeGrid) -> Result<(), String> {
        let (Some(first), Some(last)) = (self.legs.first(), self.legs.last()) else {
            return Err("no legs".into());
        };
        if first.place != Place::Residential || last.place != Place::Residential {
            return Err("first and last leg must be residential".into());
        }
        if first.zone != last.zone {
            return Err("EV must return to its home zone".into());
        }
        if first.arrive != 0 || last.depart != grid.interval_count {
            return Err("legs must span the whole grid".into());
        }
        for w in self.legs.windows(2) {
            if w[0].depart > w[1].arrive {
                return Err(format!("legs overlap at t={}", w[1].arrive));
            }
        }
        if self.legs.iter().any(|l| l.arrive >= l.depart) {
            return Err("every leg must last at least one interval".into());
        }
        Ok(())
    }

    /// Driving intervals as `(interval, from zone, to zone)`.
    pub fn travel(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.legs
            .windows(2)
            .flat_map(|w| (w[0].depart..w[1].arrive).map(move |t| (t, w[0].zone, w[1].zone)))
    }
}

/// One stop of a day plan: drive for `travel` intervals, then park for `stay` intervals.
struct Hop {
    place: Place,
    zone: usize,
    travel: usize,
    stay: usize,
}

fn pick(rng: &mut impl Rng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi.max(lo))
}

/// Intervals covering between `lo` and `hi` minutes, chosen uniformly.
fn span(rng: &mut impl Rng, grid: &TimeGrid, lo_min: f64, hi_min: f64) -> usize {
    pick(rng, grid.intervals_for(lo_min), grid.intervals_for(hi_min))
}

/// A departure interval whose start lies in `[from, to)` hours of `day`.
fn departure(rng: &mut impl Rng, grid: &TimeGrid, day: usize, from: f64, to: f64) -> usize {
    let a = grid.interval_at(day, from);
    let b = grid.interval_at(day, to).max(a + 1);
    rng.random_range(a..b)
}

fn day_plan(
    user: UserType,
    loc: &Locations,
    nzones: usize,
    grid: &TimeGrid,
    day: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(usize, Vec<Hop>)> {
    let home = loc.residential;
    let commute = |rng: &mut ChaCha8Rng| span(rng, grid, 30.0, 90.0);
    let weekend = is_weekend(grid.weekday(day));
    match user {
        UserType::DayWorker if !weekend => {
            let start = departure(rng, grid, day, 8.0, 10.0);
            let hops = vec![
                Hop {
                    place: Place::Work,
                    zone: loc.work,
                    travel: commute(rng),
                    stay: span(rng, grid, 420.0, 540.0),
                },
                Hop {
                    place: Place::Other,
                    zone: loc.other,
                    travel: commute(rng),
                    stay: span(rng, grid, 60.0, 120.0),
                },
                Hop {
                    place: Place::Residential,
                    zone: home,
                    travel: commute(rng),
                    stay: 0,
                },
            ];
            Some((start, hops))
        }
        UserType::DayWorker => {
            if !rng.random_bool(0.5) {
                return None;
            }
            let start = departure(rng, grid, day, 10.0, 14.0);
            let hops = vec![
                Hop {
                    place: Place::Other,
                    zone: loc.other,
                    travel: commute(rng),
                    stay: span(rng, grid, 60.0, 180.0),
                },
                Hop {
                    place: Place::Residential,
                    zone: home,
                    travel: commute(rng),
                    stay: 0,
                },
            ];
            Some((start, hops))
        }
        UserType::Taxi => {
            let start = departure(rng, grid, day, 7.0, 7.5);
            let end = grid.interval_at(day, 22.0);
            let depot = loc.work;
            let mut hops = vec![Hop {
                place: Place::Work,
                zone: depot,
                travel: commute(rng),
                stay: 1,
            }];
            let mut t = start + hops[0].travel + 1;
            loop {
                let shift = span(rng, grid, 120.0, 240.0);
                let rest = span(rng, grid, 60.0, 120.0);
                if t + shift + rest > end {
                    break;
                }
                hops.push(Hop {
                    place: Place::Work,
                    zone: depot,
                    travel: shift,
                    stay: rest,
                });
                t += shift + rest;
            }
            hops.push(Hop {
                place: Place::Residential,
                zone: home,
                travel: commute(rng),
                stay: 0,
            });
            Some((start, hops))
        }
        UserType::Logistics => {
            let start = departure(rng, grid, day, 6.0, 6.5);
            let mut hops = Vec::new();
            for _ in 0..2 {
                let mut order: Vec<usize> = (0..nzones).collect();
                order.shuffle(rng);
                for z in order {
                    hops.push(Hop {
                        place: Place::Stop,
                        zone: z,
                        travel: span(rng, grid, 30.0, 60.0),
                        stay: 1,
                    });
                }
                hops.push(Hop {
                    place: Place::Work,
                    zone: loc.work,
                    travel: span(rng, grid, 30.0, 60.0),
                    stay: span(rng, grid, 60.0, 120.0),
                });
            }
            hops.push(Hop {
                place: Place::Residential,
                zone: home,
                travel: commute(rng),
                stay: 0,
            });
            Some((start, hops))
        }
    }
}

/// Builds a weekly itinerary from the user type's daily template.
///
/// Days whose template would not finish before the grid ends, or would start before the EV is
/// back home from the previous day, are spent at home.
pub fn generate_itinerary(
    ev: &EvSpec,
    locations: &Locations,
    nzones: usize,
    grid: &TimeGrid,
    seed: u64,
) -> Result<Itinerary, GeneratorError> {
    if grid.total_hours() < 24.0 - 1e-9 {
        return Err(GeneratorError::GridTooShort {
            hours: grid.total_hours(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let home = locations.residential;
    let mut legs = vec![Leg {
        place: Place::Residential,
        zone: home,
        arrive: 0,
        depart: 0,
    }];
    for day in 0..grid.days_covered() {
        let Some((start, hops)) = day_plan(ev.user_type, locations, nzones, grid, day, &mut rng)
        else {
            continue;
        };
        let mut t = start;
        let mut day_legs = Vec::new();
        for h in &hops {
            let arrive = t + h.travel;
            let depart = arrive + h.stay;
            day_legs.push(Leg {
                place: h.place,
                zone: h.zone,
                arrive,
                depart,
            });
            t = depart;
        }
        let home_since = legs.last().expect("home leg").arrive;
        // The closing home leg needs at least one parked interval before the grid ends.
        if start <= home_since || t >= grid.interval_count {
            continue;
        }
        legs.last_mut().expect("home leg").depart = start;
        legs.extend(day_legs);
    }
    legs.last_mut().expect("home leg").depart = grid.interval_count;
    let it = Itinerary {
        ev_id: ev.id.clone(),
        legs,
    };
    debug_assert_eq!(it.check(grid), Ok(()));
    Ok(it)
}

/// Presence `b(i,z,t)` from parked legs and driving consumption `d(i,t)` from travel
/// intervals, priced at `consumption_matrix[from][to]`.
pub fn itinerary_to_presence(
    itineraries: &[Itinerary],
    consumption_matrix: &[Vec<f64>],
    grid: &TimeGrid,
) -> PresenceSchedule {
    let nz = consumption_matrix.len();
    let nt = grid.interval_count;
    let mut presence = vec![vec![vec![false; nt]; nz]; itineraries.len()];
    let mut driving = vec![vec![0.0; nt]; itineraries.len()];
    for (i, it) in itineraries.iter().enumerate() {
        for leg in &it.legs {
            for t in leg.arrive..leg.depart.min(nt) {
                presence[i][leg.zone][t] = true;
            }
        }
        for (t, from, to) in it.travel() {
            if t < nt {
                driving[i][t] = consumption_matrix[from][to];
            }
        }
    }
    PresenceSchedule {
        presence,
        driving_consumption: driving,
    }
}

/// Greedy charge-whenever-plugged simulation; see `model::validate`.
fn greedy_feasible(ev: &EvSpec, presence: &[Vec<bool>], driving: &[f64], dt: f64) -> bool {
    let mut e = ev.initial_energy_kwh;
    for t in 0..driving.len() {
        if presence.iter().any(|z| z[t]) {
            e = (e + ev.max_charge_kw * dt).min(ev.battery_capacity_kwh);
        }
        e -= driving[t];
        if e < -1e-9 {
            return false;
        }
    }
    e >= ev.target_energy_kwh - 1e-9
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FleetSummary {
    pub fleet_size: usize,
    pub day_workers: usize,
    pub logistics: usize,
    pub taxis: usize,
    /// `(zone id, EVs living there)` in zone order.
    pub residential_per_zone: Vec<(String, usize)>,
    pub work_per_zone: Vec<(String, usize)>,
}

#[derive(Clone, Debug)]
pub struct GeneratedScenario {
    pub scenario: ScenarioConfig,
    pub itineraries: Vec<Itinerary>,
    pub locations: Vec<Locations>,
    pub summary: FleetSummary,
}

/// Expands a generator config into a self-contained scenario.
pub fn generate_scenario(config: &GeneratorConfig) -> Result<GeneratedScenario, GeneratorError> {
    config.check()?;
    let grid = &config.grid;
    if grid.total_hours() < 24.0 - 1e-9 {
        return Err(GeneratorError::GridTooShort {
            hours: grid.total_hours(),
        });
    }
    let zones: Vec<Zone> = config
        .zones
        .iter()
        .map(|s| Zone {
            id: s.id.clone(),
            name: s.name.clone(),
            kind: Some(s.kind),
            local_demand: s
                .local_demand
                .clone()
                .unwrap_or_else(|| synthetic_demand(grid, s.kind, s.peak_kw)),
            power_cap: None,
        })
        .collect();
    let prices = bundled_prices(config.price_profile, grid, &zones)?;

    let types = user_types(config);
    let locations = assign_locations(config);
    let width = config.fleet_size.saturating_sub(1).to_string().len().max(3);
    let mut fleet = Vec::with_capacity(config.fleet_size);
    let mut itineraries = Vec::with_capacity(config.fleet_size);
    for i in 0..config.fleet_size {
        let t = &config.ev;
        let ev = EvSpec {
            id: format!("ev{i:0width$}"),
            battery_capacity_kwh: t.battery_capacity_kwh,
            initial_energy_kwh: t.initial_energy_kwh,
            target_energy_kwh: t.target_energy_kwh,
            max_charge_kw: t.max_charge_kw,
            max_discharge_kw: t.max_discharge_kw,
            user_type: types[i],
        };
        let mut found = None;
        for attempt in 0..MAX_ATTEMPTS {
            let seed = stream(config.rng_seed, i, PURPOSE_ITINERARY, attempt).next_u64();
            let it = generate_itinerary(&ev, &locations[i], zones.len(), grid, seed)?;
            let p =
                itinerary_to_presence(std::slice::from_ref(&it), &config.consumption_matrix, grid);
            if greedy_feasible(
                &ev,
                &p.presence[0],
                &p.driving_consumption[0],
                grid.dt_hours,
            ) {
                found = Some(it);
                break;
            }
        }
        let it = found.ok_or(GeneratorError::Infeasible {
            ev: i,
            attempts: MAX_ATTEMPTS,
        })?;
        fleet.push(ev);
        itineraries.push(it);
    }
    let presence = itinerary_to_presence(&itineraries, &config.consumption_matrix, grid);

    let count = |u: UserType| types.iter().filter(|&&x| x == u).count();
    let per_zone = |f: fn(&Locations) -> usize| {
        zones
            .iter()
            .enumerate()
            .map(|(k, z)| (z.id.clone(), locations.iter().filter(|l| f(l) == k).count()))
            .collect()
    };
    let summary = FleetSummary {
        fleet_size: config.fleet_size,
        day_workers: count(UserType::DayWorker),
        logistics: count(UserType::Logistics),
        taxis: count(UserType::Taxi),
        residential_per_zone: per_zone(|l| l.residential),
        work_per_zone: per_zone(|l| l.work),
    };

    let mut scenario = ScenarioConfig {
        grid: grid.clone(),
        zones,
        prices,
        fleet,
        presence,
        direction_mode: config.direction_mode,
        cap_policy: config.cap_policy.clone(),
        currency: config.currency.clone(),
        solver: SolverSettings::default(),
    };
    scenario.apply_cap_policy()?;
    Ok(GeneratedScenario {
        scenario,
        itineraries,
        locations,
        summary,
    })
}
