use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gridsched::commands::{
    export_lp_command, fleet_summary, generate, solve_command, validate_command,
};
use gridsched::error::Failure;
use gridsched::overrides::{Eta, Overrides};
use gridsched::sweep::{run_sweep, SweepOptions};
use gridsched_core::model::{DirectionMode, PriceProfile, ZoneSelection};

/// Cost-minimizing charge schedules for EV fleets across grid zones.
///
/// Exit codes: 0 success, 1 other error, 2 invalid input, 3 infeasible scenario, 4 solver failure.
#[derive(Parser)]
#[command(name = "gridsched", version)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

/// Scenario overrides. Each flag replaces the corresponding scenario field.
#[derive(Args)]
struct OverrideArgs {
    /// Direction mode: uni or v2g.
    #[arg(long)]
    mode: Option<DirectionMode>,
    /// Replace prices with a bundled profile: rt, nd or re.
    #[arg(long)]
    price: Option<PriceProfile>,
    /// Cap headroom over each constrained zone's peak demand, as a fraction; `inf` removes caps.
    #[arg(long)]
    eta: Option<Eta>,
    /// Zones the cap applies to: all, none or a comma-separated list of zone ids.
    #[arg(long)]
    constrain: Option<ZoneSelection>,
    /// Currency label for reports.
    #[arg(long)]
    currency: Option<String>,
    /// Primal feasibility tolerance.
    #[arg(long)]
    tol_feas: Option<f64>,
    /// Optimality tolerance on reduced costs.
    #[arg(long)]
    tol_opt: Option<f64>,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Overrides {
            mode: a.mode,
            price: a.price,
            eta: a.eta,
            constrain: a.constrain,
            currency: a.currency,
            tol_feas: a.tol_feas,
            tol_opt: a.tol_opt,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Expand a generator config into a self-contained scenario file.
    Generate {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Overrides the config's rng_seed and GRIDSCHED_SEED.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write presence and driving consumption as CSV into this directory.
        #[arg(long)]
        dump_presence: Option<PathBuf>,
    },
    /// Solve a scenario and write the schedule, report and plot data.
    Solve {
        scenario: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        /// Also write the LP in free MPS format.
        #[arg(long)]
        export_lp: Option<PathBuf>,
    },
    /// Run every combination of a sweep spec.
    Sweep {
        spec: PathBuf,
        /// Concurrent runs; defaults to the available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
        /// Reuse results of runs already present in the output directory.
        #[arg(long)]
        resume: bool,
        /// Maximum number of runs; overrides the spec's limit.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Check a scenario file without solving it.
    Validate { scenario: PathBuf },
    /// Write the scenario's LP in free MPS format.
    ExportLp {
        scenario: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn dispatch(command: Command) -> Result<String, Failure> {
    match command {
        Command::Generate {
            config,
            out,
            seed,
            dump_presence,
        } => {
            let g = generate(&config, &out, seed, dump_presence.as_deref())?;
            Ok(format!("{}wrote {}\n", fleet_summary(&g), out.display()))
        }
        Command::Solve {
            scenario,
            overrides,
            out,
            export_lp,
        } => {
            let table = solve_command(&scenario, &overrides.into(), &out, export_lp.as_deref())?;
            Ok(format!("{table}wrote {}\n", out.display()))
        }
        Command::Sweep {
            spec,
            jobs,
            resume,
            limit,
        } => {
            let o = run_sweep(
                &spec,
                &SweepOptions {
                    jobs,
                    resume,
                    limit,
                },
            )?;
            Ok(format!(
                "{} runs ({} distinct, {} reused, {} failed); wrote {}\n",
                o.runs,
                o.unique,
                o.reused,
                o.failed,
                o.summary.display()
            ))
        }
        Command::Validate { scenario } => validate_command(&scenario),
        Command::ExportLp {
            scenario,
            overrides,
            out,
        } => export_lp_command(&scenario, &overrides.into(), &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
