//! Fixed-grid comparator: one bandit arm per grid price.
//!
//! Each arm keeps the scenario history of its own price, plays the
//! scenario-average optimal inventory for that history, and tracks the mean
//! realized cost of those plays. Selection minimizes `mean - radius/(2√n)`
//! with the same radius the interval agents use. This is the classic
//! discretize-then-eliminate recipe the hierarchical learner is measured
//! against.

use crate::agents::LCB_RADIUS;
use crate::config::{theorem_constants, ExperimentConfig};
use crate::environment::ScenarioSet;
use crate::meta::RunCtx;
use crate::saa::{saa_argmin_inventory, AggregatedCost};
use crate::steplog::StepLog;

/// Final state of one grid arm.
#[derive(Debug, Clone)]
pub struct ArmSummary {
    pub price: f64,
    pub plays: u64,
    pub mean_cost: f64,
}

struct Arm {
    price: f64,
    plays: u64,
    mean_cost: f64,
    scenarios: ScenarioSet,
    inventory: Vec<f64>,
}

impl Arm {
    fn index(&self, radius: f64) -> f64 {
        if self.plays == 0 {
            f64::NEG_INFINITY
        } else {
            self.mean_cost - LCB_RADIUS * radius / (2.0 * (self.plays as f64).sqrt())
        }
    }
}

/// Grid prices for `grid ≥ 2` span `[0, p_max]` inclusive; a single-arm grid
/// degenerates to the midpoint price.
pub fn grid_prices(grid: usize, p_max: f64) -> Vec<f64> {
    assert!(grid >= 1);
    if grid == 1 {
        return vec![p_max / 2.0];
    }
    (0..grid)
        .map(|g| p_max * g as f64 / (grid - 1) as f64)
        .collect()
}

/// Run the grid comparator for the configured horizon on one seed.
pub fn baseline_ucb_grid(
    config: &ExperimentConfig,
    grid: usize,
    effective_seed: u64,
) -> (Vec<StepLog>, Vec<ArmSummary>) {
    let consts = theorem_constants(config);
    let mut ctx = RunCtx::new(config, &consts, effective_seed, grid);
    let m = config.market.m;
    let mut arms: Vec<Arm> = grid_prices(grid, config.market.p_max)
        .into_iter()
        .map(|price| Arm {
            price,
            plays: 0,
            mean_cost: 0.0,
            scenarios: ScenarioSet::new(price),
            inventory: vec![1.0; m],
        })
        .collect();

    while ctx.t < ctx.horizon {
        // Lowest index wins; unplayed arms are infinitely optimistic and
        // ties break toward the smaller arm id.
        let mut g = 0;
        for i in 1..arms.len() {
            if arms[i].index(consts.delta_k) < arms[g].index(consts.delta_k) {
                g = i;
            }
        }
        ctx.lcb_snapshot = arms.iter().map(|a| a.index(consts.delta_k)).collect();
        let arm = &mut arms[g];
        let inventory = arm.inventory.clone();
        let Some((demand, cost)) = ctx.play(g, 0, &inventory, arm.price) else {
            break;
        };
        arm.scenarios.record(&demand);
        arm.mean_cost =
            (arm.mean_cost * arm.plays as f64 + cost) / (arm.plays as f64 + 1.0);
        arm.plays += 1;
        let agg = AggregatedCost::from_scenarios(&arm.scenarios);
        let (inv, _) = saa_argmin_inventory(&agg, ctx.market);
        arm.inventory = inv.levels().to_vec();
    }

    let summary = arms
        .iter()
        .map(|a| ArmSummary {
            price: a.price,
            plays: a.plays,
            mean_cost: a.mean_cost,
        })
        .collect();
    (ctx.logs, summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::tests_support::two_interval_config;

    #[test]
    fn single_arm_plays_the_midpoint_forever() {
        let cfg = two_interval_config(40);
        let (logs, arms) = baseline_ucb_grid(&cfg, 1, 5);
        assert_eq!(logs.len(), 40);
        assert!(logs.iter().all(|r| r.price == 0.5));
        assert_eq!(arms[0].plays, 40);
    }

    #[test]
    fn every_arm_gets_an_initial_play() {
        let cfg = two_interval_config(200);
        let (logs, arms) = baseline_ucb_grid(&cfg, 8, 5);
        assert_eq!(logs.len(), 200);
        for arm in &arms {
            assert!(arm.plays >= 1, "arm at {} never played", arm.price);
        }
        let total: u64 = arms.iter().map(|a| a.plays).sum();
        assert_eq!(total, 200);
    }

    #[test]
    fn noiseless_grid_converges_to_the_best_arm() {
        // Zero-noise variant: arm costs are deterministic, so after the radii
        // shrink the best arm dominates the dispatch counts.
        let mut cfg = two_interval_config(3000);
        cfg.demand.noise = crate::environment::Noise::FiniteSupport {
            atoms: vec![crate::environment::NoiseAtom {
                offset: vec![0.0],
                prob: 1.0,
            }],
        };
        let (_, arms) = baseline_ucb_grid(&cfg, 3, 1);
        // Prices 0, 0.5, 1: the profitable arms are 0.5 and 1.0; price 0 earns
        // nothing and must fall behind once separation kicks in.
        let best_plays = arms.iter().map(|a| a.plays).max().unwrap();
        assert!(arms[0].plays < best_plays, "{arms:?}");
    }
}
