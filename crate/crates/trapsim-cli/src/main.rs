//! Command-line front end for the scenario library: run named campaigns,
//! validate configs, and compute stability curves from recorded CSVs.
//!
//! Exit codes are CI-oriented: 0 on success, 1 for config or validation
//! problems, 2 for runtime failures, 3 when a run completed but missed an
//! expectation declared in its config.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use trapsim::scenario::{
    load_scenario, load_scenario_str, run_scenario, shipped_scenario, shipped_scenarios, Scenario,
    ScenarioOutcome,
};
use trapsim::stability::{
    allan_deviation, classify_noise_slope, default_tau_grid, drift_rate, interpolate_gaps,
    AdevMode,
};
use trapsim::Error;

#[derive(Parser)]
#[command(
    name = "trapsim",
    version,
    about = "Secular-frequency stability campaigns for an RF ion trap"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios (shipped names or paths to TOML files)
    Run(RunArgs),
    /// Parse and validate scenario files without running them
    Validate {
        /// Shipped scenario names or paths to TOML files
        #[arg(required = true)]
        scenarios: Vec<String>,
    },
    /// List the scenarios shipped with the binary
    ListScenarios,
    /// Allan deviation of a column in a recorded CSV
    Adev(AdevArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Shipped scenario names or paths to TOML files
    #[arg(required = true)]
    scenarios: Vec<String>,
    /// Directory that receives one artifact folder per scenario
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
    /// Override the seed of every scenario in this invocation
    #[arg(long)]
    seed: Option<u64>,
    /// Override the simulated duration, seconds
    #[arg(long)]
    duration: Option<f64>,
    /// Run up to this many scenarios concurrently
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct AdevArgs {
    /// CSV file with a time column followed by value columns
    trace: PathBuf,
    /// Column to analyze (default: the second column)
    #[arg(long)]
    column: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Absolute)]
    mode: ModeArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Absolute,
    Fractional,
}

impl From<ModeArg> for AdevMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Absolute => AdevMode::Absolute,
            ModeArg::Fractional => AdevMode::Fractional,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Validate { scenarios } => cmd_validate(&scenarios),
        Command::ListScenarios => cmd_list(),
        Command::Adev(args) => cmd_adev(&args),
    };
    ExitCode::from(code)
}

/// A scenario argument is either a shipped name or a path to a TOML file.
fn resolve_scenario(arg: &str) -> Result<Scenario, Error> {
    if let Some(shipped) = shipped_scenario(arg) {
        return load_scenario_str(shipped.text);
    }
    if Path::new(arg).exists() || arg.ends_with(".toml") || arg.contains('/') {
        return load_scenario(arg);
    }
    Err(Error::ScenarioValidation(format!(
        "{arg:?} is neither a shipped scenario (see `trapsim list-scenarios`) nor a TOML file"
    )))
}

fn cmd_run(args: &RunArgs) -> u8 {
    let mut scenarios = Vec::new();
    for name in &args.scenarios {
        let mut scenario = match resolve_scenario(name) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {name}: {e}");
                return e.exit_code() as u8;
            }
        };
        if let Some(seed) = args.seed {
            scenario.seed = seed;
        }
        if let Some(duration) = args.duration {
            scenario.duration_s = duration;
        }
        if let Err(e) = scenario.validate() {
            eprintln!("error: {name}: {e}");
            return e.exit_code() as u8;
        }
        if scenarios.iter().any(|(_, s): &(_, Scenario)| s.name == scenario.name) {
            eprintln!(
                "error: scenario name {:?} appears twice in this run set; outputs would collide",
                scenario.name
            );
            return 1;
        }
        scenarios.push((name.clone(), scenario));
    }

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: could not start {} worker threads: {e}", args.jobs);
            return 2;
        }
    };
    let results: Vec<Result<ScenarioOutcome, Error>> = pool.install(|| {
        scenarios
            .par_iter()
            .map(|(_, scenario)| run_scenario(scenario, &args.out_dir))
            .collect()
    });

    let mut code = 0u8;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for ((name, _), result) in scenarios.iter().zip(&results) {
        match result {
            Ok(outcome) => {
                let _ = write!(out, "{}", outcome.report_text);
                let _ = writeln!(out, "artifacts: {}\n", outcome.out_dir.display());
                if !outcome.all_checks_passed() {
                    code = code.max(3);
                }
            }
            Err(e) => {
                eprintln!("error: {name}: {e}");
                code = code.max(e.exit_code() as u8);
            }
        }
    }
    // A runtime failure outranks an expectation miss in the exit code.
    if results.iter().any(|r| matches!(r, Err(e) if e.exit_code() == 2)) {
        code = 2;
    }
    code
}

fn cmd_validate(names: &[String]) -> u8 {
    let mut code = 0u8;
    for name in names {
        match resolve_scenario(name) {
            Ok(s) => {
                println!(
                    "ok: {} ({}, {} s, seed {})",
                    s.name,
                    s.kind.label(),
                    s.duration_s,
                    s.seed
                );
            }
            Err(e) => {
                eprintln!("error: {name}: {e}");
                code = code.max(e.exit_code() as u8);
            }
        }
    }
    code
}

fn cmd_list() -> u8 {
    let mut table = String::new();
    for shipped in shipped_scenarios() {
        let detail = match load_scenario_str(shipped.text) {
            Ok(s) => format!("{}, {} s", s.kind.label(), s.duration_s),
            Err(e) => format!("BROKEN: {e}"),
        };
        let _ = writeln!(table, "{:<32} {:<22} {}", shipped.name, detail, shipped.summary);
    }
    print!("{table}");
    0
}

fn cmd_adev(args: &AdevArgs) -> u8 {
    match adev_from_csv(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {e}", args.trace.display());
            e.exit_code() as u8
        }
    }
}

/// Read `t, value [, flags...]` rows, infer the sample period from the time
/// column, honor an `in_range` mask when present, and print the deviation
/// table as CSV on stdout with a human summary on stderr.
fn adev_from_csv(args: &AdevArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.trace)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::InsufficientData("empty CSV".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let value_col = match &args.column {
        Some(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| {
                Error::ScenarioValidation(format!(
                    "column {name:?} not found; file has {header:?}"
                ))
            })?,
        None => 1,
    };
    if header.len() <= value_col.max(1) {
        return Err(Error::InsufficientData(format!(
            "need a time column and a value column, found {header:?}"
        )));
    }
    let mask_col = header.iter().position(|h| *h == "in_range");

    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut valid = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |idx: usize| -> Result<f64, Error> {
            fields
                .get(idx)
                .and_then(|f| f.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::InsufficientData(format!(
                        "row {}: cannot parse column {} of {line:?}",
                        i + 2,
                        header[idx]
                    ))
                })
        };
        times.push(parse(0)?);
        values.push(parse(value_col)?);
        valid.push(match mask_col {
            Some(idx) => {
                let field = fields.get(idx).map(|f| f.trim()).unwrap_or("");
                field == "true" || field == "1"
            }
            None => true,
        });
    }
    if times.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} data rows is not enough for a deviation estimate",
            times.len()
        )));
    }
    let sample_period = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(sample_period > 0.0) {
        return Err(Error::InsufficientData(
            "time column is not increasing".into(),
        ));
    }

    let (filled, gap_fraction) = interpolate_gaps(&values, &valid)?;
    let taus = default_tau_grid(sample_period, sample_period * filled.len() as f64);
    let mut report = allan_deviation(&filled, sample_period, &taus, args.mode.into())?;
    match classify_noise_slope(&report) {
        Ok(slopes) => report.slopes = slopes,
        Err(Error::ClassificationUnavailable) => {}
        Err(e) => return Err(e),
    }
    report.drift = Some(drift_rate(&filled, sample_period)?);

    report.write_csv(std::io::stdout().lock())?;

    let mean = filled.iter().sum::<f64>() / filled.len() as f64;
    eprintln!(
        "# {} rows at {:.6} s, column {}, mean {:.6}, {:.2}% interpolated",
        filled.len(),
        sample_period,
        header[value_col],
        mean,
        100.0 * gap_fraction
    );
    for decade in &report.slopes {
        eprintln!(
            "# {:>8.0} s decade: {} (slope {:+.2})",
            decade.decade_start,
            decade.class.label(),
            decade.slope
        );
    }
    if let Some(drift) = report.drift {
        eprintln!("# drift: {:+.6e} per s (+- {:.2e})", drift.rate, drift.rate_sigma);
    }
    Ok(())
}
