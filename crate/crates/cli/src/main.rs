//! `pla` — experiment driver for the pricing-and-allocation learner.
//!
//! Subcommands: `run` (LCB learner over replications), `oracle` (exact
//! per-interval optima), `baseline` (fixed-grid comparator), `check`
//! (property suites), `sweep` (vary one config field). `PLA_LOG` in
//! {quiet, info, trace} controls diagnostics on stderr.
//!
//! Exit codes: 0 success, 1 check failure, 2 configuration error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use pla_core::baseline::baseline_ucb_grid;
use pla_core::config::{validate_config, ExperimentConfig};
use pla_core::environment::{empirical_finite_support, DemandModel};
use pla_core::regret::{compute_regret, fit_slope};
use pla_core::rng::{oracle_rng, replication_seed};
use pla_core::saa::{global_optimum, OracleResult};
use pla_core::steplog::{write_oracle_csv, write_regret_csv, write_steps_csv, write_summary_csv};
use pla_core::{checks, meta};

#[derive(Parser)]
#[command(name = "pla", version, about = "Joint pricing and inventory allocation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; replication r runs on seed + r. Overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replications. Overrides the config.
    #[arg(long)]
    reps: Option<u64>,
    /// Output directory. Overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Slope-fit window "lo,hi" in periods. Defaults to the full horizon.
    #[arg(long, value_parser = parse_window)]
    window: Option<(u64, u64)>,
    /// Sample count for the Monte Carlo oracle (continuous-noise models).
    #[arg(long)]
    mc_oracle: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the LCB learner and write step, regret, and summary files.
    Run(CommonArgs),
    /// Compute the exact per-interval optima and write oracle.csv.
    Oracle(CommonArgs),
    /// Run the fixed-grid comparator.
    Baseline {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of grid arms; defaults to ceil(T^(1/3)).
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Run the property suites and exit nonzero on any failure.
    Check {
        /// Seed for the randomized suites.
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Re-run the experiment while varying one numeric config field.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Dotted path of the field to vary, e.g. "horizon" or "market.p_max".
        #[arg(long)]
        field: String,
        /// Comma-separated values to substitute.
        #[arg(long)]
        values: String,
    },
}

fn parse_window(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| "expected \"lo,hi\"".to_string())?;
    let lo = a.trim().parse::<u64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<u64>().map_err(|e| e.to_string())?;
    if lo == 0 || hi < lo {
        return Err("window must satisfy 1 <= lo <= hi".into());
    }
    Ok((lo, hi))
}

fn init_logging() {
    let level = match std::env::var("PLA_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("trace") => log::LevelFilter::Trace,
        Ok("info") | Err(_) => log::LevelFilter::Info,
        Ok(other) => {
            eprintln!("PLA_LOG={other} not recognized; using info");
            log::LevelFilter::Info
        }
    };
    env_logger::Builder::new().filter_level(level).init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(common) => cmd_run(&common),
        Command::Oracle(common) => cmd_oracle(&common),
        Command::Baseline { common, grid } => cmd_baseline(&common, grid),
        Command::Check { seed } => return cmd_check(seed),
        Command::Sweep {
            common,
            field,
            values,
        } => cmd_sweep(&common, &field, &values),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig, String> {
    let raw = fs::read_to_string(&common.config)
        .map_err(|e| format!("cannot read {}: {e}", common.config.display()))?;
    let mut cfg = validate_config(&raw).map_err(|e| e.to_string())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = common.reps {
        cfg.replications = reps.max(1);
    }
    if let Some(out) = &common.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf, String> {
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    Ok(dir)
}

/// The model every oracle evaluation runs on: the ground truth itself when it
/// has finite support, otherwise an empirical resampling of it.
fn oracle_model(cfg: &ExperimentConfig, mc: Option<u64>) -> Result<DemandModel, String> {
    if cfg.demand.is_finite_support() {
        return Ok(cfg.demand.clone());
    }
    let samples = mc.ok_or_else(|| {
        "continuous-noise model has no exact oracle; pass --mc-oracle <samples>".to_string()
    })?;
    if samples < 100 {
        return Err("--mc-oracle needs at least 100 samples".into());
    }
    let mut rng = oracle_rng(cfg.seed);
    Ok(empirical_finite_support(&cfg.demand, samples, &mut rng))
}

fn solve_oracle(cfg: &ExperimentConfig, mc: Option<u64>) -> Result<(DemandModel, OracleResult), String> {
    let model = oracle_model(cfg, mc)?;
    let oracle = global_optimum(&model, &cfg.market, None).map_err(|e| e.to_string())?;
    Ok((model, oracle))
}

fn cmd_run(common: &CommonArgs) -> Result<(), String> {
    let cfg = load_config(common)?;
    let dir = out_dir(&cfg)?;
    let (model, oracle) = solve_oracle(&cfg, common.mc_oracle)?;
    let window = common.window.unwrap_or((1, cfg.horizon));
    log::info!(
        "run: T={} reps={} p*={:.6} w*={:.6}",
        cfg.horizon,
        cfg.replications,
        oracle.p_star,
        oracle.w_star
    );

    let rows: Vec<(u64, f64, Option<f64>, Vec<u64>)> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| -> Result<_, String> {
            let seed = replication_seed(cfg.seed, rep);
            let mut out = meta::run(&cfg, seed);
            let mut series =
                compute_regret(&mut out.logs, oracle.w_star, &model, &cfg.market, seed)
                    .map_err(|e| e.to_string())?;
            series.window = window;
            series.slope = fit_slope(&series.cum, window);
            write_steps_csv(&dir.join(format!("steps_{seed}.csv")), &out.logs)
                .map_err(|e| e.to_string())?;
            write_regret_csv(&dir.join(format!("regret_{seed}.csv")), &series)
                .map_err(|e| e.to_string())?;
            let total = series.cum.last().copied().unwrap_or(0.0);
            let t_k: Vec<u64> = out.agents.iter().map(|a| a.t_k).collect();
            log::info!("seed {seed}: regret {total:.4} slope {:?}", series.slope);
            Ok((seed, total, series.slope, t_k))
        })
        .collect::<Result<_, _>>()?;

    write_summary_csv(&dir.join("summary.csv"), &rows).map_err(|e| e.to_string())?;
    println!(
        "wrote {} replication(s) to {} (summary.csv, steps_*.csv, regret_*.csv)",
        rows.len(),
        dir.display()
    );
    Ok(())
}

fn cmd_oracle(common: &CommonArgs) -> Result<(), String> {
    let cfg = load_config(common)?;
    let dir = out_dir(&cfg)?;
    let (_, oracle) = solve_oracle(&cfg, common.mc_oracle)?;
    write_oracle_csv(&dir.join("oracle.csv"), &oracle).map_err(|e| e.to_string())?;
    println!("global: p* = {:.9}, w* = {:.9}", oracle.p_star, oracle.w_star);
    for it in &oracle.per_interval {
        println!(
            "interval {}: [{:.6}, {:.6}] p* = {:.9} w* = {:.9}",
            it.k, it.lo, it.hi, it.p_star, it.w_star
        );
    }
    Ok(())
}

fn cmd_baseline(common: &CommonArgs, grid: Option<usize>) -> Result<(), String> {
    let cfg = load_config(common)?;
    let dir = out_dir(&cfg)?;
    let grid = grid.unwrap_or_else(|| (cfg.horizon as f64).powf(1.0 / 3.0).ceil() as usize);
    if grid < 1 {
        return Err("grid must be at least 1".into());
    }
    let (model, oracle) = solve_oracle(&cfg, common.mc_oracle)?;
    let window = common.window.unwrap_or((1, cfg.horizon));
    let rows: Vec<(u64, f64, Option<f64>, Vec<u64>)> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| -> Result<_, String> {
            let seed = replication_seed(cfg.seed, rep);
            let (mut logs, arms) = baseline_ucb_grid(&cfg, grid, seed);
            let mut series = compute_regret(&mut logs, oracle.w_star, &model, &cfg.market, seed)
                .map_err(|e| e.to_string())?;
            series.window = window;
            series.slope = fit_slope(&series.cum, window);
            write_steps_csv(&dir.join(format!("baseline_steps_{seed}.csv")), &logs)
                .map_err(|e| e.to_string())?;
            write_regret_csv(&dir.join(format!("baseline_regret_{seed}.csv")), &series)
                .map_err(|e| e.to_string())?;
            let total = series.cum.last().copied().unwrap_or(0.0);
            let plays: Vec<u64> = arms.iter().map(|a| a.plays).collect();
            Ok((seed, total, series.slope, plays))
        })
        .collect::<Result<_, _>>()?;
    write_summary_csv(&dir.join("baseline_summary.csv"), &rows).map_err(|e| e.to_string())?;
    println!(
        "wrote baseline ({grid} arms) over {} replication(s) to {}",
        rows.len(),
        dir.display()
    );
    Ok(())
}

fn cmd_check(seed: u64) -> ExitCode {
    let mut failed = false;
    for (name, result) in checks::run_all(seed) {
        match result {
            Ok(()) => println!("{name}: PASS"),
            Err(e) => {
                failed = true;
                println!("{name}: FAIL — {e}");
            }
        }
    }
    if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_sweep(common: &CommonArgs, field: &str, values: &str) -> Result<(), String> {
    let raw = fs::read_to_string(&common.config)
        .map_err(|e| format!("cannot read {}: {e}", common.config.display()))?;
    let base: serde_json::Value =
        serde_json::from_str(&raw).map_err(|e| format!("parse error: {e}"))?;
    let parsed: Vec<f64> = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("bad value {v:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if parsed.is_empty() {
        return Err("no sweep values given".into());
    }

    let mut all_rows: Vec<(u64, f64, Option<f64>, Vec<u64>)> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    for &value in &parsed {
        let mut patched = base.clone();
        set_field(&mut patched, field, value)?;
        let cfg = validate_config(&patched.to_string()).map_err(|e| e.to_string())?;
        let mut cfg = cfg;
        if let Some(seed) = common.seed {
            cfg.seed = seed;
        }
        if let Some(reps) = common.reps {
            cfg.replications = reps.max(1);
        }
        if let Some(out) = &common.out {
            cfg.output = Some(out.clone());
        }
        let (model, oracle) = solve_oracle(&cfg, common.mc_oracle)?;
        let window = common.window.unwrap_or((1, cfg.horizon));
        for rep in 0..cfg.replications {
            let seed = replication_seed(cfg.seed, rep);
            let mut out = meta::run(&cfg, seed);
            let series = {
                let mut s =
                    compute_regret(&mut out.logs, oracle.w_star, &model, &cfg.market, seed)
                        .map_err(|e| e.to_string())?;
                s.slope = fit_slope(&s.cum, window);
                s
            };
            let total = series.cum.last().copied().unwrap_or(0.0);
            let t_k: Vec<u64> = out.agents.iter().map(|a| a.t_k).collect();
            println!(
                "{field} = {value}: seed {seed} regret {total:.4} slope {:?}",
                series.slope
            );
            all_rows.push((seed, total, series.slope, t_k));
            labels.push(value);
        }
    }

    let cfg_out = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&cfg_out).map_err(|e| e.to_string())?;
    write_sweep_csv(&cfg_out.join("sweep.csv"), field, &labels, &all_rows)?;
    Ok(())
}

fn set_field(root: &mut serde_json::Value, path: &str, value: f64) -> Result<(), String> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| format!("field path {path:?} does not address an object"))?;
        if i + 1 == parts.len() {
            let slot = obj
                .get_mut(*part)
                .ok_or_else(|| format!("unknown field {part:?} in {path:?}"))?;
            *slot = if slot.is_u64() || slot.is_i64() {
                serde_json::Value::from(value as u64)
            } else {
                serde_json::Value::from(value)
            };
            return Ok(());
        }
        cur = obj
            .get_mut(*part)
            .ok_or_else(|| format!("unknown field {part:?} in {path:?}"))?;
    }
    Err(format!("empty field path {path:?}"))
}

fn write_sweep_csv(
    path: &Path,
    field: &str,
    labels: &[f64],
    rows: &[(u64, f64, Option<f64>, Vec<u64>)],
) -> Result<(), String> {
    use std::fmt::Write as _;
    let mut out = String::from("# pla.sweep.v1\n");
    let _ = writeln!(out, "{field},seed,reg_total,slope");
    for (label, (seed, total, slope, _)) in labels.iter().zip(rows) {
        let _ = writeln!(
            out,
            "{label},{seed},{total:.17e},{}",
            slope.map(|s| format!("{s:.17e}")).unwrap_or_else(|| "NaN".into())
        );
    }
    fs::write(path, out).map_err(|e| e.to_string())?;
    Ok(())
}
