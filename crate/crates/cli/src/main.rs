use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use isac_core::config::ExperimentConfig;
use isac_core::covariance_opt::{solve_capacity, solve_sensing_only};
use isac_core::experiments::{
    run_power_sweep, run_rmse_study, run_tradeoff, write_rmse_csv, write_tradeoff_csv, ExperimentKind,
    ExperimentSpec, Grid, Method,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "isac-crb", version, about = "CRB-rate tradeoffs for multi-antenna ISAC multicast")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// CRB versus rate threshold (grid in bits/s/Hz).
    Tradeoff(SweepArgs),
    /// CRB versus transmit power (grid in dBm).
    PowerSweep(SweepArgs),
    /// Monte-Carlo estimation error versus power (dBm) or block length.
    Rmse {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, value_enum, default_value_t = RmseAxis::Power)]
        axis: RmseAxis,
        /// Overrides `trials` from the config.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Largest achievable multicast rate on the drawn channels.
    Capacity(CommonArgs),
    /// CRB with no rate constraint.
    SensingOnly(CommonArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RmseAxis {
    Power,
    Length,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment config; defaults apply to omitted fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    scenario: u8,
    /// Output CSV path; a `.json` companion is written next to it.
    /// Without it the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// `start:step:stop` or a comma-separated list.
    #[arg(long)]
    grid: String,
    /// Comma-separated method tags, or `all`.
    #[arg(long, default_value = "all")]
    methods: String,
    /// Fill in the wall_ms column.
    #[arg(long)]
    timing: bool,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn spec(kind: ExperimentKind, args: &SweepArgs) -> Result<ExperimentSpec> {
    let spec = ExperimentSpec {
        kind,
        scenario: args.common.scenario,
        methods: Method::parse_list(&args.methods)?,
        grid: args.grid.parse::<Grid>()?,
        config: load_config(args.common.config.as_deref())?,
        seed: args.common.seed,
    };
    spec.validate()?;
    Ok(spec)
}

/// Runs `write_csv` into `out` (or stdout) and drops `json` beside it.
fn emit(
    out: Option<&Path>,
    json: &serde_json::Value,
    write_csv: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
            write_csv(&mut w)?;
            w.flush()?;
            let jpath = path.with_extension("json");
            let mut body = serde_json::to_string_pretty(json)?;
            body.push('\n');
            std::fs::write(&jpath, body).with_context(|| format!("writing {}", jpath.display()))?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write_csv(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Tradeoff(args) => tradeoff_like(ExperimentKind::Tradeoff, &args),
        Command::PowerSweep(args) => tradeoff_like(ExperimentKind::PowerSweep, &args),
        Command::Rmse { sweep, axis, trials } => {
            let kind = match axis {
                RmseAxis::Power => ExperimentKind::RmseVsPower,
                RmseAxis::Length => ExperimentKind::RmseVsLength,
            };
            let spec = spec(kind, &sweep)?;
            let study = run_rmse_study(&spec, trials)?;
            let json = serde_json::to_value(&study)?;
            emit(sweep.common.out.as_deref(), &json, |w| Ok(write_rmse_csv(&study, w)?))?;
            Ok(study.any_infeasible())
        }
        Command::Capacity(args) => {
            let config = load_config(args.config.as_deref())?;
            let cfg = config.system()?;
            let spec = single_spec(&config, &args);
            let channels = spec.channels(&cfg)?;
            let cap = solve_capacity(&cfg, &channels)?;
            let json = json!({
                "schema": isac_core::experiments::SCHEMA_VERSION,
                "seed": args.seed,
                "config": config,
                "r_max": cap.r_max,
                "t_star": cap.t_star,
                "rank": cap.rank,
                "solver_status": cap.report.status.as_str(),
                "iterations": cap.report.iterations,
            });
            emit(args.out.as_deref(), &json, |w| {
                writeln!(w, "r_max,t_star,rank,solver_status,iterations")?;
                writeln!(
                    w,
                    "{:.10e},{:.10e},{},{},{}",
                    cap.r_max,
                    cap.t_star,
                    cap.rank,
                    cap.report.status.as_str(),
                    cap.report.iterations
                )?;
                Ok(())
            })?;
            Ok(false)
        }
        Command::SensingOnly(args) => {
            let config = load_config(args.config.as_deref())?;
            let cfg = config.system()?;
            let scenario = config.scenario(args.scenario)?;
            let p = solve_sensing_only(&cfg, &scenario)?;
            let json = json!({
                "schema": isac_core::experiments::SCHEMA_VERSION,
                "scenario": args.scenario,
                "config": config,
                "crb": p.crb,
                "solver_status": p.status.as_str(),
                "iterations": p.iterations,
            });
            emit(args.out.as_deref(), &json, |w| {
                writeln!(w, "scenario,crb,solver_status,iterations")?;
                writeln!(w, "{},{:.10e},{},{}", args.scenario, p.crb, p.status.as_str(), p.iterations)?;
                Ok(())
            })?;
            Ok(false)
        }
    }
}

fn single_spec(config: &ExperimentConfig, args: &CommonArgs) -> ExperimentSpec {
    ExperimentSpec {
        kind: ExperimentKind::Tradeoff,
        scenario: args.scenario,
        methods: vec![Method::OptimalCov],
        grid: Grid { values: vec![config.rate] },
        config: config.clone(),
        seed: args.seed,
    }
}

fn tradeoff_like(kind: ExperimentKind, args: &SweepArgs) -> Result<bool> {
    let spec = spec(kind, args)?;
    let table = match kind {
        ExperimentKind::PowerSweep => run_power_sweep(&spec)?,
        _ => run_tradeoff(&spec)?,
    };
    for v in &table.dominance_violations {
        eprintln!("warning: dominance violated at {v}");
    }
    let mut json = serde_json::to_value(&table)?;
    if !args.timing {
        if let Some(rows) = json.get_mut("rows").and_then(|r| r.as_array_mut()) {
            for r in rows {
                r["wall_ms"] = serde_json::Value::Null;
            }
        }
    }
    emit(args.common.out.as_deref(), &json, |w| Ok(write_tradeoff_csv(&table.rows, args.timing, w)?))?;
    Ok(table.any_infeasible())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("some points were infeasible");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
