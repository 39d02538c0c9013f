//! Regret accounting against the exact oracle.
//!
//! Regret charges the *expected* cost of each played pair, not the realized
//! one: the oracle column is `Q(I_t, p_t)` under the true demand law and the
//! per-period regret is its excess over the global optimum. Realized costs
//! stay in the log for variance diagnostics.

use crate::environment::DemandModel;
use crate::market::MarketParams;
use crate::saa::{QOracle, SaaError};
use crate::steplog::{RegretSeries, StepLog};

/// Fill the oracle columns of a log in place. Decisions repeat for long
/// stretches, so evaluations are memoized.
pub fn annotate_logs(
    logs: &mut [StepLog],
    w_star: f64,
    model: &DemandModel,
    market: &MarketParams,
) -> Result<(), SaaError> {
    let mut oracle = QOracle::new(model, market)?;
    for row in logs.iter_mut() {
        let q = oracle.eval(&row.inventory, row.price);
        row.oracle_cost = q;
        row.inst_regret = q - w_star;
    }
    Ok(())
}

/// Cumulative expected regret of an annotated (or annotatable) log.
pub fn compute_regret(
    logs: &mut [StepLog],
    w_star: f64,
    model: &DemandModel,
    market: &MarketParams,
    seed: u64,
) -> Result<RegretSeries, SaaError> {
    if logs.iter().any(|r| r.oracle_cost.is_nan()) {
        annotate_logs(logs, w_star, model, market)?;
    }
    let mut cum = Vec::with_capacity(logs.len());
    let mut acc = 0.0;
    for row in logs.iter() {
        acc += row.inst_regret;
        cum.push(acc);
    }
    Ok(RegretSeries {
        seed,
        cum,
        window: (1, logs.len() as u64),
        slope: None,
    })
}

/// Ordinary least squares slope of `ln Reg(t)` against `ln t` over the window
/// `[lo, hi]`, using only periods with strictly positive regret. `None` when
/// fewer than two usable points remain.
pub fn fit_slope(cum: &[f64], window: (u64, u64)) -> Option<f64> {
    let (lo, hi) = window;
    let pts: Vec<(f64, f64)> = cum
        .iter()
        .enumerate()
        .map(|(i, r)| (i as u64 + 1, *r))
        .filter(|(t, r)| *t >= lo && *t <= hi && *r > 0.0)
        .map(|(t, r)| ((t as f64).ln(), r.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = pts.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::tests_support::two_interval_config;
    use crate::meta;
    use crate::saa::global_optimum;

    #[test]
    fn synthetic_power_laws_recover_their_exponents() {
        let sqrt: Vec<f64> = (1..=4096).map(|t| 3.0 * (t as f64).sqrt()).collect();
        let lin: Vec<f64> = (1..=4096).map(|t| 0.5 * t as f64).collect();
        let twothirds: Vec<f64> = (1..=4096).map(|t| 2.0 * (t as f64).powf(2.0 / 3.0)).collect();
        assert!((fit_slope(&sqrt, (1, 4096)).unwrap() - 0.5).abs() < 1e-9);
        assert!((fit_slope(&lin, (1, 4096)).unwrap() - 1.0).abs() < 1e-9);
        assert!((fit_slope(&twothirds, (1, 4096)).unwrap() - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn slope_is_scale_invariant() {
        let base: Vec<f64> = (1..=512).map(|t| (t as f64).powf(0.62)).collect();
        let scaled: Vec<f64> = base.iter().map(|v| 17.3 * v).collect();
        let a = fit_slope(&base, (10, 512)).unwrap();
        let b = fit_slope(&scaled, (10, 512)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn empty_window_yields_none() {
        let zeros = vec![0.0; 100];
        assert!(fit_slope(&zeros, (1, 100)).is_none());
        let short = vec![1.0, 2.0];
        assert!(fit_slope(&short, (50, 60)).is_none());
    }

    #[test]
    fn small_noiseless_run_has_decaying_average_regret() {
        // Noiseless single-edge market with an interior profit vertex. The
        // confidence radius is shrunk so bracket cuts happen within a
        // 2^10-period toy horizon; the full-scale honest-radius behaviour is
        // covered by the acceptance suite.
        let mut cfg = two_interval_config(1 << 10);
        cfg.demand.a = vec![1.1];
        cfg.demand.noise = crate::environment::Noise::FiniteSupport {
            atoms: vec![crate::environment::NoiseAtom {
                offset: vec![0.0],
                prob: 1.0,
            }],
        };
        let oracle = global_optimum(&cfg.demand, &cfg.market, None).unwrap();
        let consts = crate::config::TheoremConstants {
            delta_k: 0.02,
            ..crate::config::theorem_constants(&cfg)
        };
        let mut out = meta::run_with_constants(&cfg, &consts, 5);
        let series =
            compute_regret(&mut out.logs, oracle.w_star, &cfg.demand, &cfg.market, 5).unwrap();
        let t = cfg.horizon as usize;
        let full = series.cum[t - 1];
        assert!(full.is_finite() && full > 0.0);
        assert!(full / (t as f64) < series.cum[t / 2 - 1] / (t / 2) as f64);
    }

    #[test]
    fn regret_is_additive_across_contiguous_segments() {
        let cfg = two_interval_config(300);
        let oracle = global_optimum(&cfg.demand, &cfg.market, None).unwrap();
        let out = meta::run(&cfg, 21);
        let mut all = out.logs.clone();
        let series =
            compute_regret(&mut all, oracle.w_star, &cfg.demand, &cfg.market, 21).unwrap();
        let mut first = out.logs[..120].to_vec();
        let mut second = out.logs[120..].to_vec();
        let s1 = compute_regret(&mut first, oracle.w_star, &cfg.demand, &cfg.market, 21).unwrap();
        let s2 = compute_regret(&mut second, oracle.w_star, &cfg.demand, &cfg.market, 21).unwrap();
        let total = s1.cum.last().unwrap() + s2.cum.last().unwrap();
        assert!((series.cum.last().unwrap() - total).abs() < 1e-9);
    }

    #[test]
    fn optimal_decisions_accrue_zero_regret() {
        let cfg = two_interval_config(200);
        let oracle = global_optimum(&cfg.demand, &cfg.market, None).unwrap();
        // Hand-build a log that always plays the oracle decision.
        let mut logs: Vec<StepLog> = (1..=50)
            .map(|t| StepLog {
                t,
                k_hat: 0,
                stage: 3,
                price: oracle.p_star,
                inventory: oracle.i_star.levels().to_vec(),
                demand: vec![0.0],
                allocation: vec![0.0],
                realized_cost: 0.0,
                oracle_cost: f64::NAN,
                inst_regret: f64::NAN,
                lcb: vec![0.0, 0.0],
            })
            .collect();
        let series =
            compute_regret(&mut logs, oracle.w_star, &cfg.demand, &cfg.market, 0).unwrap();
        for (i, v) in series.cum.iter().enumerate() {
            assert!(v.abs() < 1e-7, "period {}: {v}", i + 1);
        }
        // A single suboptimal period bumps the series by exactly its excess:
        // the empty-inventory pair has expected cost 0, so the jump is -w_star.
        logs[10].inventory = vec![0.0];
        logs[10].oracle_cost = f64::NAN;
        let series2 =
            compute_regret(&mut logs, oracle.w_star, &cfg.demand, &cfg.market, 0).unwrap();
        let jump = series2.cum.last().unwrap() - series.cum.last().unwrap();
        assert!((jump - (-oracle.w_star)).abs() < 1e-7, "jump {jump}");
    }
}
