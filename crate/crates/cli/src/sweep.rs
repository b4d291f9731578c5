//! Cross-product sweeps over scenario parameters.
//!
//! Every point of the grid is resolved to a full scenario and identified by the SHA-256 of its
//! JSON form, so identical points run once and a resumed sweep skips finished runs. Runs write
//! their artifacts to `<output_dir>/runs/<run id>/`; the master table `summary.csv` is written
//! once at the end, with one row per grid point in spec order.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use gridsched_core::generate::{generate_scenario, GeneratorConfig};
use gridsched_core::io::{load_scenario, scenario_to_json};
use gridsched_core::model::{DirectionMode, PriceProfile, ScenarioConfig, ZoneSelection};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::commands::{env_seed, load_generator, run};
use crate::error::Failure;
use crate::output::write_run;
use crate::overrides::{Eta, Overrides};

pub const DEFAULT_LIMIT: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Eta,
    ConstrainedZones,
    PriceProfile,
    DirectionMode,
    FleetSize,
    RngSeed,
}

impl Parameter {
    pub fn name(self) -> &'static str {
        match self {
            Parameter::Eta => "eta",
            Parameter::ConstrainedZones => "constrained_zones",
            Parameter::PriceProfile => "price_profile",
            Parameter::DirectionMode => "direction_mode",
            Parameter::FleetSize => "fleet_size",
            Parameter::RngSeed => "rng_seed",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
pub struct Axis {
    pub parameter: Parameter,
    pub values: Vec<Value>,
}

/// Sweep description. Paths are relative to the spec file. Exactly one of `base_scenario` and
/// `base_generator` is given; `fleet_size` and `rng_seed` axes need a generator.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub base_scenario: Option<PathBuf>,
    #[serde(default)]
    pub base_generator: Option<PathBuf>,
    pub axes: Vec<Axis>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub limit: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
enum Setting {
    Eta(Eta),
    Zones(ZoneSelection),
    Price(PriceProfile),
    Mode(DirectionMode),
    Fleet(usize),
    Seed(u64),
}

fn parse_setting(p: Parameter, v: &Value) -> Result<(Setting, String), String> {
    let text = |v: &Value| {
        v.as_str()
            .map(str::to_string)
            .ok_or("expected a string".to_string())
    };
    let int = |v: &Value| {
        v.as_u64()
            .ok_or("expected a nonnegative integer".to_string())
    };
    let setting = match p {
        Parameter::Eta => match v {
            Value::Null => Setting::Eta(Eta::Unbounded),
            Value::Number(n) => Setting::Eta(Eta::Fraction(n.as_f64().unwrap_or(f64::NAN))),
            Value::String(s) => Setting::Eta(s.parse()?),
            _ => return Err("expected a number, null or \"inf\"".into()),
        },
        Parameter::ConstrainedZones => match v {
            Value::Array(ids) => Setting::Zones(ZoneSelection::Named(
                ids.iter().map(text).collect::<Result<_, _>>()?,
            )),
            _ => Setting::Zones(text(v)?.parse()?),
        },
        Parameter::PriceProfile => Setting::Price(text(v)?.parse()?),
        Parameter::DirectionMode => Setting::Mode(text(v)?.parse()?),
        Parameter::FleetSize => Setting::Fleet(int(v)? as usize),
        Parameter::RngSeed => Setting::Seed(int(v)?),
    };
    let label = match &setting {
        Setting::Eta(e) => e.to_string(),
        Setting::Zones(z) => z.to_string(),
        Setting::Price(p) => p.short_name().to_string(),
        Setting::Mode(m) => m.short_name().to_string(),
        Setting::Fleet(n) => n.to_string(),
        Setting::Seed(s) => s.to_string(),
    };
    Ok((setting, label))
}

/// One grid point: a setting and its label per axis.
type Point = Vec<(Setting, String)>;

fn expand(axes: &[Vec<(Setting, String)>]) -> Vec<Point> {
    let mut points: Vec<Point> = vec![vec![]];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |s| {
                    let mut q = p.clone();
                    q.push(s.clone());
                    q
                })
            })
            .collect();
    }
    points
}

enum Base {
    Scenario(ScenarioConfig),
    Generator(GeneratorConfig),
}

impl Base {
    fn resolve(&self, point: &Point) -> Result<ScenarioConfig, Failure> {
        let mut overrides = Overrides::default();
        let mut config = match self {
            Base::Scenario(c) => c.clone(),
            Base::Generator(g) => {
                let mut g = g.clone();
                for (s, _) in point {
                    match s {
                        Setting::Fleet(n) => g.fleet_size = *n,
                        Setting::Seed(seed) => g.rng_seed = *seed,
                        _ => {}
                    }
                }
                generate_scenario(&g)?.scenario
            }
        };
        for (s, _) in point {
            match s {
                Setting::Eta(e) => overrides.eta = Some(*e),
                Setting::Zones(z) => overrides.constrain = Some(z.clone()),
                Setting::Price(p) => overrides.price = Some(*p),
                Setting::Mode(m) => overrides.mode = Some(*m),
                Setting::Fleet(_) | Setting::Seed(_) => {}
            }
        }
        overrides.apply(&mut config)?;
        Ok(config)
    }
}

pub fn run_id(config: &ScenarioConfig) -> String {
    let digest = Sha256::digest(scenario_to_json(config).as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Outcome of one run, stored next to its artifacts as `result.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub status: String,
    pub total_cost: Option<f64>,
    /// `(zone id, μ)`.
    pub peak_ratio_pct: Vec<(String, f64)>,
    /// `(zone id, ξ)`.
    pub energy_ratio_pct: Vec<(String, f64)>,
    pub message: String,
}

fn execute(config: &ScenarioConfig, dir: &Path) -> RunRecord {
    let outcome = run(config, None).and_then(|solved| {
        write_run(dir, config, &solved.schedule, &solved.report)?;
        Ok(solved.report)
    });
    match outcome {
        Ok(r) => RunRecord {
            status: "ok".into(),
            total_cost: Some(r.total_cost),
            peak_ratio_pct: r
                .zones
                .iter()
                .map(|z| (z.zone_id.clone(), z.peak_ratio_pct))
                .collect(),
            energy_ratio_pct: r
                .zones
                .iter()
                .map(|z| (z.zone_id.clone(), z.energy_ratio_pct))
                .collect(),
            message: String::new(),
        },
        Err(e) => RunRecord {
            status: e.status().into(),
            total_cost: None,
            peak_ratio_pct: vec![],
            energy_ratio_pct: vec![],
            message: e.to_string(),
        },
    }
}

pub struct SweepOptions {
    pub jobs: Option<usize>,
    pub resume: bool,
    pub limit: Option<usize>,
}

pub struct SweepOutcome {
    pub runs: usize,
    pub unique: usize,
    pub reused: usize,
    pub failed: usize,
    pub summary: PathBuf,
}

pub fn load_spec(path: &Path) -> Result<SweepSpec, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

pub fn run_sweep(spec_path: &Path, opts: &SweepOptions) -> Result<SweepOutcome, Failure> {
    let spec = load_spec(spec_path)?;
    let root = spec_path.parent().unwrap_or(Path::new("."));
    let invalid = |m: String| Failure::Validation(format!("{}: {m}", spec_path.display()));

    let mut axes = Vec::with_capacity(spec.axes.len());
    let mut seen = Vec::new();
    for (k, axis) in spec.axes.iter().enumerate() {
        if seen.contains(&axis.parameter) {
            return Err(invalid(format!(
                "axes[{k}]: `{}` appears twice",
                axis.parameter.name()
            )));
        }
        seen.push(axis.parameter);
        if axis.values.is_empty() {
            return Err(invalid(format!("axes[{k}].values: empty")));
        }
        let values = axis
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| {
                parse_setting(axis.parameter, v)
                    .map_err(|m| invalid(format!("axes[{k}].values[{j}]: {m}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        axes.push(values);
    }
    let total: usize = axes.iter().map(Vec::len).product();
    let limit = opts.limit.or(spec.limit).unwrap_or(DEFAULT_LIMIT);
    if total > limit {
        return Err(invalid(format!("{total} runs exceed the limit of {limit}")));
    }

    let base = match (&spec.base_scenario, &spec.base_generator) {
        (Some(p), None) => {
            if seen
                .iter()
                .any(|p| matches!(p, Parameter::FleetSize | Parameter::RngSeed))
            {
                return Err(invalid(
                    "fleet_size and rng_seed axes need base_generator".into(),
                ));
            }
            Base::Scenario(load_scenario(&root.join(p))?)
        }
        (None, Some(p)) => {
            let mut g = load_generator(&root.join(p))?;
            if !seen.contains(&Parameter::RngSeed) {
                if let Some(s) = env_seed()? {
                    g.rng_seed = s;
                }
            }
            Base::Generator(g)
        }
        _ => {
            return Err(invalid(
                "give exactly one of base_scenario and base_generator".into(),
            ))
        }
    };

    let points = expand(&axes);
    let configs = points.iter().map(|p| base.resolve(p)).collect::<Vec<_>>();
    let ids: Vec<Option<String>> = configs
        .iter()
        .map(|c| c.as_ref().ok().map(run_id))
        .collect();

    let out = root.join(&spec.output_dir);
    let runs_dir = out.join("runs");
    fs::create_dir_all(&runs_dir).with_context(|| format!("creating {}", runs_dir.display()))?;

    // First occurrence of every distinct run.
    let mut unique: BTreeMap<&str, &ScenarioConfig> = BTreeMap::new();
    for (id, c) in ids.iter().zip(&configs) {
        if let (Some(id), Ok(c)) = (id, c) {
            unique.entry(id.as_str()).or_insert(c);
        }
    }
    let mut reused = 0;
    let mut pending = Vec::new();
    let mut records: HashMap<String, RunRecord> = HashMap::new();
    for (&id, &c) in &unique {
        let path = runs_dir.join(id).join("result.json");
        let cached = opts
            .resume
            .then(|| fs::read_to_string(&path).ok())
            .flatten()
            .and_then(|t| serde_json::from_str::<RunRecord>(&t).ok());
        match cached {
            Some(r) => {
                reused += 1;
                records.insert(id.to_string(), r);
            }
            None => pending.push((id, c)),
        }
    }

    let threads = opts
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .context("starting worker pool")?;
    let fresh: Vec<(String, RunRecord)> = pool.install(|| {
        pending
            .par_iter()
            .map(|&(id, c)| {
                let dir = runs_dir.join(id);
                let record = execute(c, &dir);
                log::info!("run {id}: {}", record.status);
                let write = fs::create_dir_all(&dir).and_then(|_| {
                    fs::write(
                        dir.join("result.json"),
                        serde_json::to_string_pretty(&record).expect("serializable"),
                    )
                });
                if let Err(e) = write {
                    log::error!("run {id}: cannot store result: {e}");
                }
                (id.to_string(), record)
            })
            .collect()
    });
    records.extend(fresh);

    let zone_ids: Vec<String> = match &base {
        Base::Scenario(c) => c.zones.iter().map(|z| z.id.clone()).collect(),
        Base::Generator(g) => g.zones.iter().map(|z| z.id.clone()).collect(),
    };
    let summary = out.join("summary.csv");
    let mut failed = 0;
    let mut body = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut body);
        let mut header = vec!["run_id".to_string()];
        header.extend(spec.axes.iter().map(|a| a.parameter.name().to_string()));
        header.extend(["status".to_string(), "total_cost".to_string()]);
        header.extend(zone_ids.iter().map(|z| format!("peak_ratio_pct_{z}")));
        header.extend(zone_ids.iter().map(|z| format!("energy_ratio_pct_{z}")));
        header.push("message".into());
        w.write_record(&header)?;
        for ((point, id), config) in points.iter().zip(&ids).zip(&configs) {
            let mut row = vec![id.clone().unwrap_or_default()];
            row.extend(point.iter().map(|(_, label)| label.clone()));
            let record = match (id, config) {
                (Some(id), _) => records[id].clone(),
                (None, Err(e)) => RunRecord {
                    status: e.status().into(),
                    total_cost: None,
                    peak_ratio_pct: vec![],
                    energy_ratio_pct: vec![],
                    message: e.to_string(),
                },
                (None, Ok(_)) => unreachable!("resolved configs always have an id"),
            };
            if record.status != "ok" {
                failed += 1;
            }
            row.push(record.status.clone());
            row.push(record.total_cost.map(|v| v.to_string()).unwrap_or_default());
            let lookup = |v: &[(String, f64)], z: &str| {
                v.iter()
                    .find(|(id, _)| id == z)
                    .map(|(_, x)| x.to_string())
                    .unwrap_or_default()
            };
            row.extend(zone_ids.iter().map(|z| lookup(&record.peak_ratio_pct, z)));
            row.extend(zone_ids.iter().map(|z| lookup(&record.energy_ratio_pct, z)));
            row.push(record.message.replace('\n', " "));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    let stamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let mut text = format!("# generated_at: {stamp}\n").into_bytes();
    text.extend(body);
    fs::write(&summary, text).with_context(|| format!("writing {}", summary.display()))?;

    Ok(SweepOutcome {
        runs: points.len(),
        unique: unique.len(),
        reused,
        failed,
        summary,
    })
}
