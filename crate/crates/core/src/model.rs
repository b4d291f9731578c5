//! Scenario description: time grid, zones, prices, fleet, presence and cap policy.
//!
//! Units are kW for power, kWh for energy and currency/kWh for prices. Energy moved in one
//! interval is always `power * dt_hours`.

use std::collections::HashSet;
use std::fmt;

use chrono::{NaiveTime, Timelike, Weekday};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: String, message: String },
    #[error("unknown zone `{0}`")]
    UnknownZone(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartLabel {
    pub weekday: Weekday,
    pub time: NaiveTime,
}

impl Default for StartLabel {
    fn default() -> Self {
        Self {
            weekday: Weekday::Sun,
            time: NaiveTime::MIN,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub interval_count: usize,
    pub dt_hours: f64,
    #[serde(default)]
    pub start_label: StartLabel,
}

impl Default for TimeGrid {
    /// One week of half-hour intervals starting Sunday midnight.
    fn default() -> Self {
        Self::new(336, 0.5)
    }
}

impl TimeGrid {
    pub fn new(interval_count: usize, dt_hours: f64) -> Self {
        Self {
            interval_count,
            dt_hours,
            start_label: StartLabel::default(),
        }
    }

    pub fn total_hours(&self) -> f64 {
        self.interval_count as f64 * self.dt_hours
    }

    /// Minutes after the start of the week's first day at which interval `t` begins.
    fn start_minute(&self, t: usize) -> f64 {
        let origin = self.start_label.time.num_seconds_from_midnight() as f64 / 60.0;
        origin + t as f64 * self.dt_hours * 60.0
    }

    /// Day offset from the first day and hour of day in `[0, 24)` at the start of interval `t`.
    pub fn day_and_hour(&self, t: usize) -> (usize, f64) {
        let m = self.start_minute(t);
        let day = (m / 1440.0).floor();
        (day as usize, (m - day * 1440.0) / 60.0)
    }

    pub fn weekday(&self, day: usize) -> Weekday {
        let base = self.start_label.weekday.num_days_from_monday() as usize;
        Weekday::try_from(((base + day) % 7) as u8).expect("value below 7")
    }

    /// Calendar weekday and hour of day at the start of interval `t`.
    pub fn clock(&self, t: usize) -> (Weekday, f64) {
        let (day, hour) = self.day_and_hour(t);
        (self.weekday(day), hour)
    }

    /// First interval starting at or after `day` days plus `hour` hours from the first day's
    /// midnight.
    pub fn interval_at(&self, day: usize, hour: f64) -> usize {
        let origin = self.start_minute(0);
        let m = day as f64 * 1440.0 + hour * 60.0 - origin;
        (m / (self.dt_hours * 60.0) - 1e-9).ceil().max(0.0) as usize
    }

    /// Whole intervals covering `minutes`, at least one.
    pub fn intervals_for(&self, minutes: f64) -> usize {
        ((minutes / (self.dt_hours * 60.0)).round() as usize).max(1)
    }

    pub fn days_covered(&self) -> usize {
        let (day, _) = self.day_and_hour(self.interval_count);
        day + 1
    }
}

pub fn is_weekend(day: Weekday) -> bool {
    matches!(day, Weekday::Sat | Weekday::Sun)
}

/// Network area class used by the bundled demand and price profiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZoneKind {
    #[serde(rename = "CBD")]
    Cbd,
    Suburb,
    Rural,
}

impl fmt::Display for ZoneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZoneKind::Cbd => "CBD",
            ZoneKind::Suburb => "Suburb",
            ZoneKind::Rural => "Rural",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ZoneKind>,
    /// Local demand `l(z,t)` in kW.
    pub local_demand: Vec<f64>,
    /// Cap `c⁺(z,t)` in kW; `None` (JSON `null`) means the zone is unconstrained.
    #[serde(default)]
    pub power_cap: Option<Vec<f64>>,
}

impl Zone {
    pub fn cap(&self, t: usize) -> Option<f64> {
        self.power_cap.as_ref().map(|c| c[t])
    }

    pub fn peak_demand(&self) -> f64 {
        self.local_demand
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PriceProfile {
    RealTime,
    NormalizedDemand,
    RetailToU,
}

impl PriceProfile {
    pub fn short_name(self) -> &'static str {
        match self {
            PriceProfile::RealTime => "rt",
            PriceProfile::NormalizedDemand => "nd",
            PriceProfile::RetailToU => "re",
        }
    }
}

impl std::str::FromStr for PriceProfile {
    type Err = String;
    /// `rt`, `nd` or `re`, or the full variant name.
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rt" | "realtime" => Ok(PriceProfile::RealTime),
            "nd" | "normalizeddemand" => Ok(PriceProfile::NormalizedDemand),
            "re" | "retailtou" => Ok(PriceProfile::RetailToU),
            other => Err(format!(
                "unknown price profile `{other}` (expected rt, nd or re)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceSchedule {
    pub profile_kind: PriceProfile,
    /// `λ(z,t)`, indexed `[zone][interval]`.
    pub charge_price: Vec<Vec<f64>>,
    /// `η(z,t)`, indexed `[zone][interval]`; must not exceed the charge price.
    pub discharge_price: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UserType {
    DayWorker,
    Logistics,
    Taxi,
}

impl UserType {
    pub const ALL: [UserType; 3] = [UserType::DayWorker, UserType::Logistics, UserType::Taxi];
}

impl fmt::Display for UserType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

fn default_capacity() -> f64 {
    60.0
}
fn default_initial() -> f64 {
    24.0
}
fn default_target() -> f64 {
    48.0
}
fn default_max_charge() -> f64 {
    7.4
}
fn default_max_discharge() -> f64 {
    -7.4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvSpec {
    pub id: String,
    #[serde(default = "default_capacity")]
    pub battery_capacity_kwh: f64,
    #[serde(default = "default_initial")]
    pub initial_energy_kwh: f64,
    #[serde(default = "default_target")]
    pub target_energy_kwh: f64,
    #[serde(default = "default_max_charge")]
    pub max_charge_kw: f64,
    /// Discharge limit stored as a nonpositive power.
    #[serde(default = "default_max_discharge")]
    pub max_discharge_kw: f64,
    pub user_type: UserType,
}

impl EvSpec {
    /// 60 kWh battery charged from 24 to 48 kWh on a ±7.4 kW charger.
    pub fn new(id: impl Into<String>, user_type: UserType) -> Self {
        Self {
            id: id.into(),
            battery_capacity_kwh: default_capacity(),
            initial_energy_kwh: default_initial(),
            target_energy_kwh: default_target(),
            max_charge_kw: default_max_charge(),
            max_discharge_kw: default_max_discharge(),
            user_type,
        }
    }
}

mod bits {
    use super::*;
    use serde::de::{self, Visitor};

    struct Bit(bool);

    impl<'de> Deserialize<'de> for Bit {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            struct V;
            impl Visitor<'_> for V {
                type Value = Bit;
                fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                    f.write_str("0, 1 or a boolean")
                }
                fn visit_bool<E: de::Error>(self, v: bool) -> Result<Bit, E> {
                    Ok(Bit(v))
                }
                fn visit_u64<E: de::Error>(self, v: u64) -> Result<Bit, E> {
                    match v {
                        0 => Ok(Bit(false)),
                        1 => Ok(Bit(true)),
                        _ => Err(E::invalid_value(de::Unexpected::Unsigned(v), &self)),
                    }
                }
                fn visit_i64<E: de::Error>(self, v: i64) -> Result<Bit, E> {
                    match v {
                        0 | 1 => self.visit_u64(v as u64),
                        _ => Err(E::invalid_value(de::Unexpected::Signed(v), &self)),
                    }
                }
            }
            d.deserialize_any(V)
        }
    }

    pub fn serialize<S: Serializer>(v: &[Vec<Vec<bool>>], s: S) -> Result<S::Ok, S::Error> {
        let ints: Vec<Vec<Vec<u8>>> = v
            .iter()
            .map(|ev| {
                ev.iter()
                    .map(|z| z.iter().map(|&b| b as u8).collect())
                    .collect()
            })
            .collect();
        ints.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Vec<bool>>>, D::Error> {
        let raw: Vec<Vec<Vec<Bit>>> = Vec::deserialize(d)?;
        Ok(raw
            .into_iter()
            .map(|ev| {
                ev.into_iter()
                    .map(|z| z.into_iter().map(|b| b.0).collect())
                    .collect()
            })
            .collect())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PresenceSchedule {
    /// `b(i,z,t)` indexed `[ev][zone][interval]`, written as 0/1.
    #[serde(with = "bits")]
    pub presence: Vec<Vec<Vec<bool>>>,
    /// `d(i,t)` in kWh per interval, indexed `[ev][interval]`.
    pub driving_consumption: Vec<Vec<f64>>,
}

impl PresenceSchedule {
    /// Zone EV `ev` is plugged into during interval `t`, if any.
    pub fn connected_zone(&self, ev: usize, t: usize) -> Option<usize> {
        self.presence[ev].iter().position(|z| z[t])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DirectionMode {
    #[serde(alias = "uni")]
    UniDirectional,
    #[serde(alias = "v2g")]
    Bidirectional,
}

impl DirectionMode {
    pub fn short_name(self) -> &'static str {
        match self {
            DirectionMode::UniDirectional => "uni",
            DirectionMode::Bidirectional => "v2g",
        }
    }
}

impl std::str::FromStr for DirectionMode {
    type Err = String;
    /// `uni` or `v2g`, or the full variant name.
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uni" | "unidirectional" => Ok(DirectionMode::UniDirectional),
            "v2g" | "bidirectional" => Ok(DirectionMode::Bidirectional),
            other => Err(format!(
                "unknown direction mode `{other}` (expected uni or v2g)"
            )),
        }
    }
}

/// Zones a cap policy applies to. JSON form: `"All"`, `"None"` or a list of zone ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SelectionRepr", into = "SelectionRepr")]
pub enum ZoneSelection {
    All,
    None,
    Named(Vec<String>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SelectionRepr {
    Word(String),
    List(Vec<String>),
}

impl TryFrom<SelectionRepr> for ZoneSelection {
    type Error = String;
    fn try_from(r: SelectionRepr) -> Result<Self, String> {
        match r {
            SelectionRepr::Word(w) => w.parse(),
            SelectionRepr::List(l) => Ok(ZoneSelection::Named(l)),
        }
    }
}

impl From<ZoneSelection> for SelectionRepr {
    fn from(s: ZoneSelection) -> Self {
        match s {
            ZoneSelection::All => SelectionRepr::Word("All".into()),
            ZoneSelection::None => SelectionRepr::Word("None".into()),
            ZoneSelection::Named(l) => SelectionRepr::List(l),
        }
    }
}

impl std::str::FromStr for ZoneSelection {
    type Err = String;
    /// `all`, `none`, or a comma-separated list of zone ids.
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => Ok(ZoneSelection::All),
            "none" => Ok(ZoneSelection::None),
            "" => Err("empty zone selection".into()),
            _ => Ok(ZoneSelection::Named(
                s.split(',').map(|p| p.trim().to_string()).collect(),
            )),
        }
    }
}

impl fmt::Display for ZoneSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZoneSelection::All => f.write_str("all"),
            ZoneSelection::None => f.write_str("none"),
            ZoneSelection::Named(l) => f.write_str(&l.join(",")),
        }
    }
}

impl ZoneSelection {
    /// Zone positions selected, or the first unknown id.
    pub fn resolve(&self, zones: &[Zone]) -> Result<Vec<usize>, ModelError> {
        match self {
            ZoneSelection::All => Ok((0..zones.len()).collect()),
            ZoneSelection::None => Ok(vec![]),
            ZoneSelection::Named(ids) => ids
                .iter()
                .map(|id| {
                    zones
                        .iter()
                        .position(|z| &z.id == id)
                        .ok_or_else(|| ModelError::UnknownZone(id.clone()))
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapPolicy {
    /// Allowed increase over each constrained zone's peak demand, as a fraction.
    pub eta: f64,
    pub constrained_zones: ZoneSelection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub tol_feas: f64,
    pub tol_opt: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol_feas: 1e-7,
            tol_opt: 1e-9,
        }
    }
}

fn default_currency() -> String {
    "AUD".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub grid: TimeGrid,
    pub zones: Vec<Zone>,
    pub prices: PriceSchedule,
    pub fleet: Vec<EvSpec>,
    pub presence: PresenceSchedule,
    pub direction_mode: DirectionMode,
    /// When present, overrides every zone's `power_cap` (see [`ScenarioConfig::apply_cap_policy`]).
    #[serde(default)]
    pub cap_policy: Option<CapPolicy>,
    #[serde(default = "default_currency")]
    pub currency: String,
    #[serde(default)]
    pub solver: SolverSettings,
}

impl ScenarioConfig {
    /// Discharge limit actually in force for EV `ev`: zero in unidirectional mode.
    pub fn effective_max_discharge(&self, ev: usize) -> f64 {
        match self.direction_mode {
            DirectionMode::UniDirectional => 0.0,
            DirectionMode::Bidirectional => self.fleet[ev].max_discharge_kw,
        }
    }

    /// Rewrites every zone's cap from `cap_policy`: selected zones get `(1+eta)·peak`, the rest
    /// become unconstrained. Without a policy the explicit caps are left alone.
    pub fn apply_cap_policy(&mut self) -> Result<(), ModelError> {
        let Some(policy) = &self.cap_policy else {
            return Ok(());
        };
        let selected = policy.constrained_zones.resolve(&self.zones)?;
        for (k, zone) in self.zones.iter_mut().enumerate() {
            if !selected.contains(&k) {
                zone.power_cap = None;
            }
        }
        let zones = materialize_caps(&self.zones, policy.eta, &policy.constrained_zones)?;
        self.zones = zones;
        Ok(())
    }
}

/// Caps every selected zone at `(1+eta)` times its peak local demand; other zones are returned
/// unchanged.
pub fn materialize_caps(
    zones: &[Zone],
    eta: f64,
    which: &ZoneSelection,
) -> Result<Vec<Zone>, ModelError> {
    if eta.is_nan() || eta < -1.0 {
        return Err(ModelError::InvalidParameter {
            name: "eta".into(),
            message: format!("must be at least -1, got {eta}"),
        });
    }
    let selected = which.resolve(zones)?;
    let mut out = zones.to_vec();
    for k in selected {
        let zone = &mut out[k];
        let cap = (1.0 + eta) * zone.peak_demand();
        zone.power_cap = Some(vec![cap; zone.local_demand.len()]);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Issue {
    pub severity: Severity,
    /// Dotted path of the offending field, e.g. `fleet[3].target_energy_kwh`.
    pub field: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}: {}", self.field, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues
            .iter()
            .filter(|i| i.severity == Severity::Warning)
    }

    fn error(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            severity: Severity::Error,
            field: field.into(),
            message: message.into(),
        });
    }

    fn warning(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            severity: Severity::Warning,
            field: field.into(),
            message: message.into(),
        });
    }
}

fn check_matrix(
    report: &mut ValidationReport,
    field: &str,
    m: &[Vec<f64>],
    rows: usize,
    cols: usize,
) -> bool {
    if m.len() != rows {
        report.error(field, format!("expected {rows} rows, found {}", m.len()));
        return false;
    }
    let mut ok = true;
    for (k, row) in m.iter().enumerate() {
        if row.len() != cols {
            report.error(
                format!("{field}[{k}]"),
                format!("expected {cols} entries, found {}", row.len()),
            );
            ok = false;
        } else if let Some(t) = row.iter().position(|v| !v.is_finite()) {
            report.error(format!("{field}[{k}][{t}]"), "value is not finite");
            ok = false;
        }
    }
    ok
}

/// Lists every violated invariant; an empty error list means the scenario can be modelled.
///
/// Warnings flag inputs that are well formed but cannot be satisfied: caps below local demand
/// and targets no charging plan can reach.
pub fn validate(config: &ScenarioConfig) -> ValidationReport {
    let mut r = ValidationReport::default();
    let grid = &config.grid;
    let nt = grid.interval_count;
    if nt == 0 {
        r.error("grid.interval_count", "must be at least 1");
    }
    if !(grid.dt_hours.is_finite() && grid.dt_hours > 0.0) {
        r.error("grid.dt_hours", "must be positive");
    }
    if config.zones.is_empty() {
        r.error("zones", "at least one zone is required");
    }
    let mut ids = HashSet::new();
    for (k, z) in config.zones.iter().enumerate() {
        let f = format!("zones[{k}]");
        if !ids.insert(z.id.as_str()) {
            r.error(format!("{f}.id"), format!("duplicate zone id `{}`", z.id));
        }
        if z.local_demand.len() != nt {
            r.error(
                format!("{f}.local_demand"),
                format!("expected {nt} entries, found {}", z.local_demand.len()),
            );
        } else if let Some(t) = z
            .local_demand
            .iter()
            .position(|&v| !(v.is_finite() && v >= 0.0))
        {
            r.error(
                format!("{f}.local_demand[{t}]"),
                "demand must be finite and nonnegative",
            );
        }
        if let Some(cap) = &z.power_cap {
            if cap.len() != nt {
                r.error(
                    format!("{f}.power_cap"),
                    format!("expected {nt} entries, found {}", cap.len()),
                );
            } else if let Some(t) = cap.iter().position(|v| !v.is_finite()) {
                r.error(
                    format!("{f}.power_cap[{t}]"),
                    "cap must be finite (use null for no cap)",
                );
            } else if z.local_demand.len() == nt {
                let below: Vec<usize> = (0..nt)
                    .filter(|&t| cap[t] < z.local_demand[t] - 1e-9)
                    .collect();
                if let Some(&t) = below.first() {
                    r.warning(
                        format!("{f}.power_cap"),
                        format!(
                            "cap below local demand in {} intervals (first at t={t}); the model will be infeasible",
                            below.len()
                        ),
                    );
                }
            }
        }
    }

    let nz = config.zones.len();
    let p = &config.prices;
    let ok_charge = check_matrix(&mut r, "prices.charge_price", &p.charge_price, nz, nt);
    let ok_discharge = check_matrix(&mut r, "prices.discharge_price", &p.discharge_price, nz, nt);
    if ok_charge && ok_discharge {
        'outer: for z in 0..nz {
            for t in 0..nt {
                if p.discharge_price[z][t] > p.charge_price[z][t] {
                    r.error(
                        format!("prices.discharge_price[{z}][{t}]"),
                        "discharge price exceeds charge price; the split-power model would not be exact",
                    );
                    break 'outer;
                }
            }
        }
    }

    let mut ev_ids = HashSet::new();
    for (i, ev) in config.fleet.iter().enumerate() {
        let f = format!("fleet[{i}]");
        if !ev_ids.insert(ev.id.as_str()) {
            r.error(format!("{f}.id"), format!("duplicate EV id `{}`", ev.id));
        }
        let vals = [
            ev.battery_capacity_kwh,
            ev.initial_energy_kwh,
            ev.target_energy_kwh,
            ev.max_charge_kw,
            ev.max_discharge_kw,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            r.error(&f, "all EV parameters must be finite");
            continue;
        }
        if ev.battery_capacity_kwh < 0.0 {
            r.error(
                format!("{f}.battery_capacity_kwh"),
                "capacity must be nonnegative",
            );
        }
        if ev.initial_energy_kwh < 0.0 || ev.initial_energy_kwh > ev.battery_capacity_kwh {
            r.error(
                format!("{f}.initial_energy_kwh"),
                "initial energy outside [0, capacity]",
            );
        }
        if ev.target_energy_kwh < 0.0 {
            r.error(
                format!("{f}.target_energy_kwh"),
                "target must be nonnegative",
            );
        }
        if ev.target_energy_kwh > ev.battery_capacity_kwh {
            r.error(format!("{f}.target_energy_kwh"), "target exceeds capacity");
        }
        if ev.max_charge_kw <= 0.0 {
            r.error(format!("{f}.max_charge_kw"), "must be positive");
        }
        if ev.max_discharge_kw > 0.0 {
            r.error(
                format!("{f}.max_discharge_kw"),
                "discharge limit is stored as a nonpositive power",
            );
        }
    }

    let ps = &config.presence;
    let nev = config.fleet.len();
    let mut presence_ok = true;
    if ps.presence.len() != nev {
        r.error(
            "presence.presence",
            format!("expected {nev} EVs, found {}", ps.presence.len()),
        );
        presence_ok = false;
    } else {
        for (i, ev) in ps.presence.iter().enumerate() {
            if ev.len() != nz || ev.iter().any(|z| z.len() != nt) {
                r.error(
                    format!("presence.presence[{i}]"),
                    format!("expected {nz} zones × {nt} intervals"),
                );
                presence_ok = false;
            }
        }
    }
    presence_ok &= check_matrix(
        &mut r,
        "presence.driving_consumption",
        &ps.driving_consumption,
        nev,
        nt,
    );
    if presence_ok {
        for i in 0..nev {
            for t in 0..nt {
                let count = (0..nz).filter(|&z| ps.presence[i][z][t]).count();
                let d = ps.driving_consumption[i][t];
                if count > 1 {
                    r.error(
                        format!("presence.presence[{i}]"),
                        format!("EV in two zones at once at t={t}"),
                    );
                    break;
                }
                if d < 0.0 {
                    r.error(
                        format!("presence.driving_consumption[{i}][{t}]"),
                        "consumption must be nonnegative",
                    );
                    break;
                }
                if count == 1 && d > 0.0 {
                    r.error(
                        format!("presence.driving_consumption[{i}][{t}]"),
                        "EV consumes driving energy while plugged in",
                    );
                    break;
                }
            }
        }
    }

    if let Some(policy) = &config.cap_policy {
        if policy.eta.is_nan() || policy.eta < -1.0 {
            r.error(
                "cap_policy.eta",
                format!("must be at least -1, got {}", policy.eta),
            );
        }
        if let Err(e) = policy.constrained_zones.resolve(&config.zones) {
            r.error("cap_policy.constrained_zones", e.to_string());
        }
    }

    if r.is_valid() {
        for i in 0..nev {
            if let Some(msg) = reachability(config, i) {
                r.warning(
                    format!("fleet[{i}]"),
                    format!("EV `{}`: {msg}", config.fleet[i].id),
                );
            }
        }
    }
    r
}

/// Charges as early and as hard as possible, ignoring zone caps. This keeps the battery as full
/// as it can be at every interval, so if it fails nothing else succeeds.
fn reachability(config: &ScenarioConfig, i: usize) -> Option<String> {
    let ev = &config.fleet[i];
    let dt = config.grid.dt_hours;
    let mut e = ev.initial_energy_kwh;
    for t in 0..config.grid.interval_count {
        if config.presence.connected_zone(i, t).is_some() {
            e = (e + ev.max_charge_kw * dt).min(ev.battery_capacity_kwh);
        }
        e -= config.presence.driving_consumption[i][t];
        if e < -1e-9 {
            return Some(format!(
                "battery runs empty at t={t} even when charged whenever plugged in"
            ));
        }
    }
    (e < ev.target_energy_kwh - 1e-9).then(|| {
        format!(
            "reaches at most {e:.3} kWh, below the {} kWh target",
            ev.target_energy_kwh
        )
    })
}
