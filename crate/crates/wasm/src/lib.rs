//! Browser bindings: the cost-curve explorer and in-page learner runs.
//!
//! Every export takes the experiment config as a JSON string and returns a
//! JSON string, so the page needs no generated TypeScript glue beyond the
//! wasm-bindgen loader. Errors come back as `{"error": "..."}`.

use wasm_bindgen::prelude::wasm_bindgen;

use pla_core::baseline::baseline_ucb_grid;
use pla_core::config::{theorem_constants, validate_config, ExperimentConfig};
use pla_core::meta;
use pla_core::regret::{compute_regret, fit_slope};
use pla_core::saa::{exact_w, global_optimum};

const MAX_BROWSER_HORIZON: u64 = 1 << 16;

fn err_json(msg: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": msg.to_string() }).to_string()
}

fn parse(config_json: &str) -> Result<ExperimentConfig, String> {
    let cfg = validate_config(config_json).map_err(|e| e.to_string())?;
    if cfg.horizon > MAX_BROWSER_HORIZON {
        return Err(format!(
            "horizon {} is above the in-page cap {MAX_BROWSER_HORIZON}",
            cfg.horizon
        ));
    }
    if !cfg.demand.is_finite_support() {
        return Err("the in-page explorer needs finite-support noise".into());
    }
    Ok(cfg)
}

/// Sample the optimistic cost curve and its per-interval optima.
#[wasm_bindgen]
pub fn cost_curve(config_json: &str, points_per_interval: u32) -> String {
    let cfg = match parse(config_json) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let oracle = match global_optimum(&cfg.demand, &cfg.market, None) {
        Ok(o) => o,
        Err(e) => return err_json(e),
    };
    let samples = points_per_interval.clamp(2, 200);
    let mut curve: Vec<(f64, f64)> = Vec::new();
    for it in &oracle.per_interval {
        if it.hi - it.lo < 1e-12 {
            continue;
        }
        for g in 0..=samples {
            let p = it.lo + (it.hi - it.lo) * g as f64 / samples as f64;
            let (w, _) = exact_w(p, &cfg.demand, &cfg.market).expect("finite support");
            curve.push((p, w));
        }
    }
    serde_json::json!({
        "p_max": cfg.market.p_max,
        "breakpoints": oracle.per_interval.iter().map(|i| i.lo).chain([cfg.market.p_max]).collect::<Vec<_>>(),
        "intervals": oracle.per_interval.iter().map(|i| serde_json::json!({
            "k": i.k, "lo": i.lo, "hi": i.hi, "p_star": i.p_star, "w_star": i.w_star,
        })).collect::<Vec<_>>(),
        "global": { "p_star": oracle.p_star, "w_star": oracle.w_star },
        "curve": curve,
    })
    .to_string()
}

fn downsample(cum: &[f64], cap: usize) -> Vec<(u64, f64)> {
    let n = cum.len();
    let stride = n.div_ceil(cap).max(1);
    let mut pts: Vec<(u64, f64)> = cum
        .iter()
        .enumerate()
        .filter(|(i, _)| (i + 1) % stride == 0 || *i == 0)
        .map(|(i, v)| (i as u64 + 1, *v))
        .collect();
    if pts.last().map(|p| p.0) != Some(n as u64) {
        pts.push((n as u64, cum[n - 1]));
    }
    pts
}

/// Run the hierarchical learner on one seed and report the regret curve,
/// the fitted slope, and the final agent states.
#[wasm_bindgen]
pub fn run_learner(config_json: &str, seed: u64) -> String {
    let cfg = match parse(config_json) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let oracle = match global_optimum(&cfg.demand, &cfg.market, None) {
        Ok(o) => o,
        Err(e) => return err_json(e),
    };
    let consts = theorem_constants(&cfg);
    let mut out = meta::run(&cfg, seed);
    let series = match compute_regret(&mut out.logs, oracle.w_star, &cfg.demand, &cfg.market, seed)
    {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let window = (cfg.horizon / 32, cfg.horizon);
    let slope = fit_slope(&series.cum, window);
    serde_json::json!({
        "seed": seed,
        "horizon": cfg.horizon,
        "delta_k": consts.delta_k,
        "w_star": oracle.w_star,
        "p_star": oracle.p_star,
        "total_regret": series.cum.last().copied().unwrap_or(0.0),
        "slope": slope,
        "window": window,
        "regret": downsample(&series.cum, 512),
        "agents": out.agents.iter().map(|a| serde_json::json!({
            "k": a.k,
            "interval": [a.interval.0, a.interval.1],
            "stage": a.stage.code(),
            "t_k": a.t_k,
            "bracket": [a.bracket.0, a.bracket.1],
            "epochs": a.completed_epochs,
            "w_hat": a.w_hat,
            "delta": if a.delta.is_finite() { Some(a.delta) } else { None },
            "lcb": if a.lcb().is_finite() { Some(a.lcb()) } else { None },
            "p_star": a.p_star,
        })).collect::<Vec<_>>(),
    })
    .to_string()
}

/// Run the fixed-grid comparator on one seed for the same horizon.
#[wasm_bindgen]
pub fn run_baseline(config_json: &str, seed: u64, grid: u32) -> String {
    let cfg = match parse(config_json) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let oracle = match global_optimum(&cfg.demand, &cfg.market, None) {
        Ok(o) => o,
        Err(e) => return err_json(e),
    };
    let grid = (grid.max(1)) as usize;
    let (mut logs, arms) = baseline_ucb_grid(&cfg, grid, seed);
    let series = match compute_regret(&mut logs, oracle.w_star, &cfg.demand, &cfg.market, seed) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    serde_json::json!({
        "seed": seed,
        "grid": grid,
        "total_regret": series.cum.last().copied().unwrap_or(0.0),
        "regret": downsample(&series.cum, 512),
        "arms": arms.iter().map(|a| serde_json::json!({
            "price": a.price, "plays": a.plays, "mean_cost": a.mean_cost,
        })).collect::<Vec<_>>(),
    })
    .to_string()
}
