use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use gridsched_core::generate::{generate_scenario, GeneratedScenario, GeneratorConfig};
use gridsched_core::io::{load_scenario, save_scenario};
use gridsched_core::metrics::{build_report, ImpactReport};
use gridsched_core::model::{validate, ScenarioConfig};
use gridsched_core::schedule::{
    build_model, check_schedule, interpret, solver_options, ChargeSchedule,
};
use gridsched_lp::mps::write_mps;
use gridsched_lp::solve;

use crate::error::Failure;
use crate::output::{render, write_run};
use crate::overrides::Overrides;

pub const SEED_ENV: &str = "GRIDSCHED_SEED";

/// Seed from `GRIDSCHED_SEED`, if set.
pub fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            Failure::Validation(format!("{SEED_ENV}: `{v}` is not an unsigned integer"))
        }),
        Err(_) => Ok(None),
    }
}

pub fn load_generator(path: &Path) -> Result<GeneratorConfig, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

pub fn fleet_summary(g: &GeneratedScenario) -> String {
    let s = &g.summary;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "fleet: {} EVs (DayWorker {}, Logistics {}, Taxi {})",
        s.fleet_size, s.day_workers, s.logistics, s.taxis
    );
    let list = |v: &[(String, usize)]| {
        v.iter()
            .map(|(z, n)| format!("{z} {n}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let _ = writeln!(out, "residential: {}", list(&s.residential_per_zone));
    let _ = writeln!(out, "work: {}", list(&s.work_per_zone));
    out
}

fn dump_presence(dir: &Path, c: &ScenarioConfig) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join("presence.csv");
    let mut w =
        csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["ev_id", "interval", "zone_id", "driving_kwh"])?;
    for (i, ev) in c.fleet.iter().enumerate() {
        for t in 0..c.grid.interval_count {
            let zone = c
                .presence
                .connected_zone(i, t)
                .map(|z| c.zones[z].id.clone())
                .unwrap_or_default();
            w.write_record([
                ev.id.clone(),
                t.to_string(),
                zone,
                c.presence.driving_consumption[i][t].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Expands a generator config into a scenario file. Seed precedence: `seed`, then
/// `GRIDSCHED_SEED`, then the config.
pub fn generate(
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    dump: Option<&Path>,
) -> Result<GeneratedScenario, Failure> {
    let mut cfg = load_generator(config)?;
    if let Some(s) = seed.map_or_else(env_seed, |s| Ok(Some(s)))? {
        cfg.rng_seed = s;
    }
    let g = generate_scenario(&cfg)?;
    save_scenario(&g.scenario, out)?;
    if let Some(dir) = dump {
        dump_presence(dir, &g.scenario)?;
    }
    Ok(g)
}

/// Scenario file with command-line overrides applied.
pub fn resolve(path: &Path, overrides: &Overrides) -> Result<ScenarioConfig, Failure> {
    let mut c = load_scenario(path)?;
    overrides.apply(&mut c)?;
    Ok(c)
}

pub struct Solved {
    pub schedule: ChargeSchedule,
    pub report: ImpactReport,
}

/// Validates, solves and evaluates one scenario, optionally writing the LP first.
pub fn run(config: &ScenarioConfig, export_lp: Option<&Path>) -> Result<Solved, Failure> {
    let started = Instant::now();
    let (lp, map) = build_model(config)?;
    if let Some(path) = export_lp {
        fs::write(path, write_mps(&lp, "gridsched"))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let solution =
        solve(&lp, &solver_options(config)).map_err(|e| Failure::Solver(e.to_string()))?;
    let schedule = interpret(&lp, &map, &solution, config)?;
    let violations = check_schedule(config, &schedule, 1e-6);
    if let Some(v) = violations.first() {
        return Err(Failure::Solver(format!(
            "solution fails the independent check: {} by {} ({} violations)",
            v.constraint,
            v.amount,
            violations.len()
        )));
    }
    let report = build_report(&schedule, config)?;
    log::info!(
        "{} variables, {} rows, {} iterations, {:.2} s",
        lp.num_vars(),
        lp.num_rows(),
        schedule.iterations,
        started.elapsed().as_secs_f64()
    );
    Ok(Solved { schedule, report })
}

pub fn solve_command(
    scenario: &Path,
    overrides: &Overrides,
    out: &Path,
    export_lp: Option<&Path>,
) -> Result<String, Failure> {
    let config = resolve(scenario, overrides)?;
    let solved = run(&config, export_lp)?;
    write_run(out, &config, &solved.schedule, &solved.report)?;
    Ok(render(&solved.report))
}

pub fn validate_command(scenario: &Path) -> Result<String, Failure> {
    let config = load_scenario(scenario)?;
    let report = validate(&config);
    let mut text = String::new();
    for issue in &report.issues {
        let _ = writeln!(text, "{issue}");
    }
    if report.is_valid() {
        let _ = writeln!(text, "{}: valid", scenario.display());
        Ok(text)
    } else {
        Err(Failure::Validation(text.trim_end().to_string()))
    }
}

pub fn export_lp_command(
    scenario: &Path,
    overrides: &Overrides,
    out: &PathBuf,
) -> Result<String, Failure> {
    let config = resolve(scenario, overrides)?;
    let (lp, _) = build_model(&config)?;
    fs::write(out, write_mps(&lp, "gridsched"))
        .with_context(|| format!("writing {}", out.display()))?;
    Ok(format!(
        "wrote {} ({} variables, {} rows, {} nonzeros)\n",
        out.display(),
        lp.num_vars(),
        lp.num_rows(),
        lp.num_nonzeros()
    ))
}
