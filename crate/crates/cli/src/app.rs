//! Argument parsing and run dispatch.

use crate::config::{apply_overrides, load_config_file, scenario_from_number};
use crate::output::emit_outputs;
use clap::{Args, Parser, Subcommand};
use fes_ilc_sim::{run_scenario, RunReport, Scenario, ScenarioConfig};
use std::path::PathBuf;

pub const OUT_DIR_ENV: &str = "FES_ILC_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "fes-ilc",
    about = "Fixed-step simulator of an FES-driven upper-limb reaching loop \
             with iterative learning control",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write per-trial CSV traces plus a summary.
    Run(RunArgs),
    /// Run scenario 2 once per learning gain (one output subdirectory each).
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Iteration (trial) count; defaults to the scenario's published depth.
    #[arg(long)]
    iterations: Option<usize>,

    /// Output directory (also settable via FES_ILC_OUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Flat `key = value` config file applied before flags.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Refuse model-parameter overrides so the run uses the published
    /// defaults exactly.
    #[arg(long)]
    paper_faithful: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario number: 1 feedback only, 2 + learning feedforward,
    /// 3 + velocity constraint.
    #[arg(long)]
    scenario: u32,

    /// Learning gain for scenarios 2 and 3.
    #[arg(long)]
    gain: Option<f64>,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated learning gains, e.g. 0.1,0.2,0.8,0.9.
    #[arg(long, value_delimiter = ',', required = true)]
    gains: Vec<f64>,

    #[command(flatten)]
    common: CommonArgs,
}

fn resolve_out_dir(arg: &Option<PathBuf>) -> PathBuf {
    arg.clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn build_config(
    scenario: Scenario,
    gain: Option<f64>,
    common: &CommonArgs,
) -> Result<ScenarioConfig, String> {
    let mut cfg = ScenarioConfig::for_scenario(scenario);
    if let Some(path) = &common.config {
        let map = load_config_file(path)?;
        apply_overrides(&mut cfg, &map, common.paper_faithful)?;
    }
    // flags override the file
    cfg.scenario = scenario;
    if let Some(g) = gain {
        cfg.learning_gain = g;
    }
    if let Some(n) = common.iterations {
        cfg.iterations = n;
    }
    if common.paper_faithful {
        cfg.paper_faithful = true;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn print_summary(report: &RunReport) {
    println!("iteration  rmse_m     nrmse      max_velocity_mps");
    for (k, trial) in report.trials.iter().enumerate() {
        println!(
            "{:>9}  {:<9.6}  {:<9.6}  {:.6}",
            k + 1,
            trial.rmse,
            trial.nrmse,
            trial.max_velocity
        );
    }
    if let Some((rmax, _)) = report.identified_bound {
        println!(
            "velocity bound {rmax:.4} m/s respected on every iteration: {}",
            report.velocity_within_bound
        );
    }
}

fn execute_one(cfg: &ScenarioConfig, dir: &PathBuf) -> Result<bool, String> {
    let report = run_scenario(cfg).map_err(|e| e.to_string())?;
    emit_outputs(&report, dir).map_err(|e| format!("writing {}: {e}", dir.display()))?;
    print_summary(&report);
    println!("wrote {}", dir.display());
    Ok(report.velocity_within_bound)
}

/// Parses arguments and runs. Returns the process exit code: 0 only when
/// every requested run completed and every safety assertion held.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders usage/help itself; keep its exit semantics
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("error: a safety assertion failed (velocity bound exceeded)");
            1
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Run(args) => {
            let scenario = scenario_from_number(args.scenario)?;
            let cfg = build_config(scenario, args.gain, &args.common)?;
            let dir = resolve_out_dir(&args.common.out);
            execute_one(&cfg, &dir)
        }
        Command::Sweep(args) => {
            if args.gains.is_empty() {
                return Err("sweep needs at least one gain".into());
            }
            let base = resolve_out_dir(&args.common.out);
            let mut all_safe = true;
            for gain in &args.gains {
                let cfg = build_config(Scenario::FeedbackPlusPilc, Some(*gain), &args.common)?;
                let dir = base.join(format!("L_{gain}"));
                println!("== learning gain {gain} ==");
                all_safe &= execute_one(&cfg, &dir)?;
            }
            Ok(all_safe)
        }
    }
}
