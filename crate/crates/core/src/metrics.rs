//! Zone and EV impact metrics.
//!
//! * peak ratio `μ_z = 100 · max m(z,·) / max l(z,·)` compares the with-EV peak to the
//!   original one;
//! * energy ratio `ξ_z` is zone `z`'s share of the fleet's signed net charged energy;
//! * `κ_i` is EV `i`'s cost and `ν_i` the share of its charged energy sent back to the grid.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::model::ScenarioConfig;
use crate::schedule::ChargeSchedule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("zone `{zone}` has zero original peak demand; peak ratio is undefined")]
    ZeroPeak { zone: String },
    #[error("fleet net charged energy is zero; energy ratio is undefined")]
    ZeroNetEnergy,
}

/// With-EV demand `m(z,t) = l(z,t) + Σ_i b(i,z,t)·p(i,t)`, indexed `[zone][interval]`.
pub fn demand_profile(schedule: &ChargeSchedule, config: &ScenarioConfig) -> Vec<Vec<f64>> {
    config
        .zones
        .iter()
        .enumerate()
        .map(|(z, zone)| {
            (0..config.grid.interval_count)
                .map(|t| {
                    let ev_load: f64 = (0..config.fleet.len())
                        .filter(|&i| config.presence.presence[i][z][t])
                        .map(|i| schedule.power[i][t])
                        .sum();
                    zone.local_demand[t] + ev_load
                })
                .collect()
        })
        .collect()
}

/// Largest value and the first interval where it occurs.
fn peak(v: &[f64]) -> (f64, usize) {
    v.iter()
        .enumerate()
        .fold((f64::NEG_INFINITY, 0), |(best, at), (t, &x)| {
            if x > best {
                (x, t)
            } else {
                (best, at)
            }
        })
}

/// `100 · max m / max l`, in percent. `zone` only labels the error.
pub fn peak_ratio(m: &[f64], l: &[f64], zone: &str) -> Result<f64, MetricError> {
    let (lmax, _) = peak(l);
    if !(lmax > 0.0) {
        return Err(MetricError::ZeroPeak {
            zone: zone.to_string(),
        });
    }
    Ok(100.0 * peak(m).0 / lmax)
}

/// Signed net EV energy (kWh) delivered in each zone.
pub fn zone_net_energy(schedule: &ChargeSchedule, config: &ScenarioConfig) -> Vec<f64> {
    let dt = config.grid.dt_hours;
    (0..config.zones.len())
        .map(|z| {
            let mut total = 0.0;
            for i in 0..config.fleet.len() {
                for t in 0..config.grid.interval_count {
                    if config.presence.presence[i][z][t] {
                        total += schedule.power[i][t] * dt;
                    }
                }
            }
            total
        })
        .collect()
}

/// Each zone's share of the fleet's net charged energy, in percent. Net exporters come out
/// negative and are reported as such.
pub fn energy_ratio(
    schedule: &ChargeSchedule,
    config: &ScenarioConfig,
) -> Result<Vec<f64>, MetricError> {
    let net = zone_net_energy(schedule, config);
    let total: f64 = net.iter().sum();
    if total.abs() < 1e-9 {
        return Err(MetricError::ZeroNetEnergy);
    }
    Ok(net.iter().map(|e| 100.0 * e / total).collect())
}

/// `ν_i = Σ p⁻ / Σ p⁺` over the cancelled split; zero for an EV that never charges.
pub fn discharged_charged_ratio(schedule: &ChargeSchedule) -> Vec<f64> {
    schedule
        .charge_kw
        .iter()
        .zip(&schedule.discharge_kw)
        .map(|(ch, dis)| {
            let c: f64 = ch.iter().sum();
            let d: f64 = dis.iter().sum();
            if c > 0.0 {
                d / c
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Peak {
    pub kw: f64,
    pub interval: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZoneMetrics {
    pub zone_id: String,
    pub peak_ratio_pct: f64,
    pub energy_ratio_pct: f64,
    pub net_energy_kwh: f64,
    pub original_peak: Peak,
    pub new_peak: Peak,
    /// Cap applied to the zone, if any.
    pub cap_kw: Option<f64>,
    /// Net load went below zero somewhere: EVs exported more than local demand.
    pub exports: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvMetrics {
    pub ev_id: String,
    pub user_type: String,
    pub cost: f64,
    pub charged_kwh: f64,
    pub discharged_kwh: f64,
    pub discharged_charged_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImpactReport {
    pub currency: String,
    pub total_cost: f64,
    pub zones: Vec<ZoneMetrics>,
    pub evs: Vec<EvMetrics>,
    /// `m(z,t)`, indexed `[zone][interval]`.
    pub demand_profile: Vec<Vec<f64>>,
}

impl ImpactReport {
    pub fn per_ev_cost(&self) -> Vec<f64> {
        self.evs.iter().map(|e| e.cost).collect()
    }

    pub fn discharged_charged_ratio(&self) -> Vec<f64> {
        self.evs
            .iter()
            .map(|e| e.discharged_charged_ratio)
            .collect()
    }

    pub fn zone(&self, id: &str) -> Option<&ZoneMetrics> {
        self.zones.iter().find(|z| z.zone_id == id)
    }
}

pub fn build_report(
    schedule: &ChargeSchedule,
    config: &ScenarioConfig,
) -> Result<ImpactReport, MetricError> {
    let m = demand_profile(schedule, config);
    let xi = energy_ratio(schedule, config)?;
    let net = zone_net_energy(schedule, config);
    let mut zones = Vec::with_capacity(config.zones.len());
    for (z, zone) in config.zones.iter().enumerate() {
        let (okw, ot) = peak(&zone.local_demand);
        let (nkw, nt) = peak(&m[z]);
        zones.push(ZoneMetrics {
            zone_id: zone.id.clone(),
            peak_ratio_pct: peak_ratio(&m[z], &zone.local_demand, &zone.id)?,
            energy_ratio_pct: xi[z],
            net_energy_kwh: net[z],
            original_peak: Peak {
                kw: okw,
                interval: ot,
            },
            new_peak: Peak {
                kw: nkw,
                interval: nt,
            },
            cap_kw: zone
                .power_cap
                .as_ref()
                .and_then(|c| c.iter().copied().reduce(f64::min)),
            exports: m[z].iter().any(|&v| v < -1e-9),
        });
    }
    let nu = discharged_charged_ratio(schedule);
    let dt = config.grid.dt_hours;
    let evs = config
        .fleet
        .iter()
        .enumerate()
        .map(|(i, ev)| EvMetrics {
            ev_id: ev.id.clone(),
            user_type: ev.user_type.to_string(),
            cost: schedule.per_ev_cost[i],
            charged_kwh: schedule.charge_kw[i].iter().sum::<f64>() * dt,
            discharged_kwh: schedule.discharge_kw[i].iter().sum::<f64>() * dt,
            discharged_charged_ratio: nu[i],
        })
        .collect();
    Ok(ImpactReport {
        currency: config.currency.clone(),
        total_cost: schedule.total_cost,
        zones,
        evs,
        demand_profile: m,
    })
}

pub const ZONE_CSV_HEADER: [&str; 9] = [
    "zone_id",
    "peak_ratio_pct",
    "energy_ratio_pct",
    "net_energy_kwh",
    "original_peak_kw",
    "original_peak_interval",
    "new_peak_kw",
    "new_peak_interval",
    "exports",
];

pub const EV_CSV_HEADER: [&str; 6] = [
    "ev_id",
    "user_type",
    "cost",
    "charged_kwh",
    "discharged_kwh",
    "discharged_charged_ratio",
];

/// One row per zone with `μ`, `ξ` and the peak locations.
pub fn write_zone_csv<W: Write>(report: &ImpactReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ZONE_CSV_HEADER)?;
    for z in &report.zones {
        w.write_record([
            z.zone_id.clone(),
            z.peak_ratio_pct.to_string(),
            z.energy_ratio_pct.to_string(),
            z.net_energy_kwh.to_string(),
            z.original_peak.kw.to_string(),
            z.original_peak.interval.to_string(),
            z.new_peak.kw.to_string(),
            z.new_peak.interval.to_string(),
            z.exports.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per EV with cost and the discharged/charged ratio.
pub fn write_ev_csv<W: Write>(report: &ImpactReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EV_CSV_HEADER)?;
    for e in &report.evs {
        w.write_record([
            e.ev_id.clone(),
            e.user_type.clone(),
            e.cost.to_string(),
            e.charged_kwh.to_string(),
            e.discharged_kwh.to_string(),
            e.discharged_charged_ratio.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
