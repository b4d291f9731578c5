//! Scenario files.
//!
//! A scenario is one JSON document mirroring [`ScenarioConfig`]. Any zone's `local_demand` or
//! `power_cap`, and either price matrix, may instead be written as `{"csv": "path"}`. The CSV
//! has a header row of zone ids and one row per interval; the column whose header matches the
//! zone id is used. Relative paths are resolved against the scenario file's directory.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use thiserror::Error;

use crate::model::{ModelError, ScenarioConfig};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Table { path: PathBuf, message: String },
    #[error("{0}")]
    Model(#[from] ModelError),
}

/// Columns of a zone-indexed CSV, keyed by header.
type Table = HashMap<String, Vec<f64>>;

fn read_table(path: &Path) -> Result<Table, IoError> {
    let table_err = |message: String| IoError::Table {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| IoError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|source| IoError::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|source| IoError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        for (k, field) in record.iter().enumerate() {
            let v = field
                .parse::<f64>()
                .map_err(|_| table_err(format!("row {}: `{field}` is not a number", row + 2)))?;
            cols[k].push(v);
        }
    }
    Ok(headers.into_iter().zip(cols).collect())
}

struct Resolver {
    base: PathBuf,
    cache: HashMap<PathBuf, Table>,
}

impl Resolver {
    fn reference(v: &Value) -> Option<&str> {
        v.as_object().filter(|o| o.len() == 1)?.get("csv")?.as_str()
    }

    fn column(&mut self, file: &str, zone: &str) -> Result<Vec<f64>, IoError> {
        let path = self.base.join(file);
        if !self.cache.contains_key(&path) {
            let table = read_table(&path)?;
            self.cache.insert(path.clone(), table);
        }
        self.cache[&path]
            .get(zone)
            .cloned()
            .ok_or_else(|| IoError::Table {
                path,
                message: format!("no column for zone `{zone}`"),
            })
    }

    /// Replaces a `{"csv": ..}` vector in place.
    fn vector(&mut self, slot: &mut Value, zone: &str) -> Result<(), IoError> {
        if let Some(file) = Self::reference(slot).map(str::to_string) {
            *slot = Value::from(self.column(&file, zone)?);
        }
        Ok(())
    }

    /// Replaces a `{"csv": ..}` `[zone][interval]` matrix in place.
    fn matrix(&mut self, slot: &mut Value, zones: &[String]) -> Result<(), IoError> {
        if let Some(file) = Self::reference(slot).map(str::to_string) {
            let rows = zones
                .iter()
                .map(|z| self.column(&file, z))
                .collect::<Result<Vec<_>, _>>()?;
            *slot = Value::from(rows);
        }
        Ok(())
    }
}

fn resolve_references(doc: &mut Value, base: &Path) -> Result<(), IoError> {
    let mut r = Resolver {
        base: base.to_path_buf(),
        cache: HashMap::new(),
    };
    let mut ids = Vec::new();
    if let Some(zones) = doc.get_mut("zones").and_then(Value::as_array_mut) {
        for zone in zones {
            let Some(id) = zone.get("id").and_then(Value::as_str).map(str::to_string) else {
                continue;
            };
            for field in ["local_demand", "power_cap"] {
                if let Some(slot) = zone.get_mut(field) {
                    r.vector(slot, &id)?;
                }
            }
            ids.push(id);
        }
    }
    if let Some(prices) = doc.get_mut("prices") {
        for field in ["charge_price", "discharge_price"] {
            if let Some(slot) = prices.get_mut(field) {
                r.matrix(slot, &ids)?;
            }
        }
    }
    Ok(())
}

/// Parses a scenario document; `base` anchors relative CSV references. A `cap_policy`, when
/// present, is applied to the zone caps.
pub fn parse_scenario(text: &str, base: &Path, origin: &Path) -> Result<ScenarioConfig, IoError> {
    let json_err = |source| IoError::Json {
        path: origin.to_path_buf(),
        source,
    };
    let mut doc: Value = serde_json::from_str(text).map_err(json_err)?;
    resolve_references(&mut doc, base)?;
    let mut config: ScenarioConfig = serde_json::from_value(doc).map_err(json_err)?;
    config.apply_cap_policy()?;
    Ok(config)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_scenario(&text, base, path)
}

/// Self-contained pretty JSON, with every vector inlined.
pub fn scenario_to_json(config: &ScenarioConfig) -> String {
    let mut s = serde_json::to_string_pretty(config).expect("scenario serializes");
    s.push('\n');
    s
}

pub fn save_scenario(config: &ScenarioConfig, path: &Path) -> Result<(), IoError> {
    fs::write(path, scenario_to_json(config)).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_scenario, GeneratorConfig};
    use crate::model::TimeGrid;

    fn small() -> ScenarioConfig {
        let mut g = GeneratorConfig::with_defaults(3, 5);
        g.grid = TimeGrid::new(48, 0.5);
        generate_scenario(&g).unwrap().scenario
    }

    #[test]
    fn save_then_load_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let s = small();
        save_scenario(&s, &path).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), s);
    }

    #[test]
    fn csv_references_are_inlined() {
        let s = small();
        let dir = tempfile::tempdir().unwrap();
        let ids: Vec<&str> = s.zones.iter().map(|z| z.id.as_str()).collect();
        let mut demand = ids.join(",") + "\n";
        let mut price = demand.clone();
        for t in 0..s.grid.interval_count {
            let row = |f: &dyn Fn(usize) -> f64| {
                (0..ids.len())
                    .map(|z| f(z).to_string())
                    .collect::<Vec<_>>()
                    .join(",")
                    + "\n"
            };
            demand += &row(&|z| s.zones[z].local_demand[t]);
            price += &row(&|z| s.prices.charge_price[z][t]);
        }
        fs::create_dir(dir.path().join("data")).unwrap();
        fs::write(dir.path().join("data/demand.csv"), demand).unwrap();
        fs::write(dir.path().join("data/price.csv"), price).unwrap();

        let mut doc = serde_json::to_value(&s).unwrap();
        for z in doc["zones"].as_array_mut().unwrap() {
            z["local_demand"] = serde_json::json!({"csv": "data/demand.csv"});
        }
        doc["prices"]["charge_price"] = serde_json::json!({"csv": "data/price.csv"});
        let path = dir.path().join("s.json");
        fs::write(&path, doc.to_string()).unwrap();

        let back = load_scenario(&path).unwrap();
        for (a, b) in back.zones.iter().zip(&s.zones) {
            for (x, y) in a.local_demand.iter().zip(&b.local_demand) {
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
        assert_eq!(back.prices.charge_price.len(), 3);
        assert_eq!(back.prices.charge_price[1].len(), s.grid.interval_count);
    }

    #[test]
    fn missing_zone_column_is_reported() {
        let s = small();
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("d.csv"), "other\n1\n").unwrap();
        let mut doc = serde_json::to_value(&s).unwrap();
        doc["zones"][0]["local_demand"] = serde_json::json!({"csv": "d.csv"});
        let path = dir.path().join("s.json");
        fs::write(&path, doc.to_string()).unwrap();
        let err = load_scenario(&path).unwrap_err().to_string();
        assert!(err.contains("no column for zone"), "{err}");
    }
}
