//! Files written for one solved scenario.
//!
//! | file | contents |
//! |---|---|
//! | `schedule.csv` | `ev_id,interval,power_kw,energy_kwh` |
//! | `summary.json` | currency, total cost, per-EV cost |
//! | `report.json` | the full impact report |
//! | `zones.csv` | one row per zone: peak and energy ratios, peaks |
//! | `evs.csv` | one row per EV: cost, energy, discharged/charged ratio |
//! | `plot/demand-<zone>.csv` | `interval,local_kw,total_kw,cap_kw,is_original_peak,is_new_peak` |
//! | `figures.json` | which file feeds which figure |

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::Context;
use gridsched_core::metrics::{write_ev_csv, write_zone_csv, ImpactReport};
use gridsched_core::model::ScenarioConfig;
use gridsched_core::schedule::ChargeSchedule;
use serde::Serialize;

pub const SCHEDULE_HEADER: [&str; 4] = ["ev_id", "interval", "power_kw", "energy_kwh"];
pub const PLOT_HEADER: [&str; 6] = [
    "interval",
    "local_kw",
    "total_kw",
    "cap_kw",
    "is_original_peak",
    "is_new_peak",
];

#[derive(Serialize)]
struct Summary<'a> {
    currency: &'a str,
    total_cost: f64,
    ev_ids: Vec<&'a str>,
    per_ev_cost: &'a [f64],
}

#[derive(Serialize)]
struct Figure {
    style: &'static str,
    file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    zone: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    column: Option<&'static str>,
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_schedule_csv(
    path: &Path,
    config: &ScenarioConfig,
    s: &ChargeSchedule,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(SCHEDULE_HEADER)?;
    for (i, ev) in config.fleet.iter().enumerate() {
        for t in 0..config.grid.interval_count {
            w.write_record([
                ev.id.clone(),
                t.to_string(),
                s.power[i][t].to_string(),
                s.energy[i][t].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_plot_csv(
    path: &Path,
    config: &ScenarioConfig,
    report: &ImpactReport,
    z: usize,
) -> anyhow::Result<()> {
    let zone = &config.zones[z];
    let metrics = &report.zones[z];
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(PLOT_HEADER)?;
    for t in 0..config.grid.interval_count {
        w.write_record([
            t.to_string(),
            zone.local_demand[t].to_string(),
            report.demand_profile[z][t].to_string(),
            zone.cap(t).map(|c| c.to_string()).unwrap_or_default(),
            (t == metrics.original_peak.interval).to_string(),
            (t == metrics.new_peak.interval).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// File-system friendly form of a zone id.
pub fn slug(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes every artifact of a solved scenario into `dir`.
pub fn write_run(
    dir: &Path,
    config: &ScenarioConfig,
    s: &ChargeSchedule,
    report: &ImpactReport,
) -> anyhow::Result<()> {
    fs::create_dir_all(dir.join("plot")).with_context(|| format!("creating {}", dir.display()))?;
    write_schedule_csv(&dir.join("schedule.csv"), config, s)?;
    write_json(
        &dir.join("summary.json"),
        &Summary {
            currency: &config.currency,
            total_cost: s.total_cost,
            ev_ids: config.fleet.iter().map(|e| e.id.as_str()).collect(),
            per_ev_cost: &s.per_ev_cost,
        },
    )?;
    write_json(&dir.join("report.json"), report)?;
    write_zone_csv(report, create(&dir.join("zones.csv"))?)?;
    write_ev_csv(report, create(&dir.join("evs.csv"))?)?;

    let mut figures = Vec::new();
    for (z, zone) in config.zones.iter().enumerate() {
        let file = format!("plot/demand-{}.csv", slug(&zone.id));
        write_plot_csv(&dir.join(&file), config, report, z)?;
        figures.push(Figure {
            style: "demand-overlay",
            file,
            zone: Some(zone.id.clone()),
            column: None,
        });
    }
    figures.push(Figure {
        style: "cost-boxplot",
        file: "evs.csv".into(),
        zone: None,
        column: Some("cost"),
    });
    figures.push(Figure {
        style: "discharge-ratio-boxplot",
        file: "evs.csv".into(),
        zone: None,
        column: Some("discharged_charged_ratio"),
    });
    figures.push(Figure {
        style: "zone-table",
        file: "zones.csv".into(),
        zone: None,
        column: None,
    });
    write_json(&dir.join("figures.json"), &figures)?;
    Ok(())
}

/// Human-readable table of the report for the terminal.
pub fn render(report: &ImpactReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>10} {:>10} {:>12}\n",
        "zone", "peak %", "energy %", "net kWh"
    ));
    for z in &report.zones {
        out.push_str(&format!(
            "{:<12} {:>10.1} {:>10.2} {:>12.2}{}\n",
            z.zone_id,
            z.peak_ratio_pct,
            z.energy_ratio_pct,
            z.net_energy_kwh,
            if z.exports { "  (exports)" } else { "" }
        ));
    }
    out.push_str(&format!(
        "total cost: {:.2} {}\n",
        report.total_cost, report.currency
    ));
    out
}
