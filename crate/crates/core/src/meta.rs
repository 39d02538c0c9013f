//! Interval construction and the meta-strategy that schedules the agents.
//!
//! The price range `[0, p_max]` is split at every sorted supply cost (with
//! sentinels at both ends), one agent per piece. After initialization the
//! loop always dispatches the agent whose lower confidence bound
//! `w_hat - 34·delta` is smallest: a search agent runs one sub-epoch, a
//! calibrating agent runs its whole stage, an exploiting agent runs a single
//! period. Every bound is refreshed after each dispatch.

use rand_chacha::ChaCha12Rng;

use crate::agents::{self, AgentState, Stage};
use crate::config::{theorem_constants, ExperimentConfig, TheoremConstants};
use crate::environment::{self, DemandModel};
use crate::market::{DemandVector, Inventory, MarketParams};
use crate::rng;
use crate::steplog::StepLog;
use crate::transport;

/// A sorted breakpoint with the cost entry it came from (sentinels have none).
#[derive(Debug, Clone, PartialEq)]
pub struct Breakpoint {
    pub value: f64,
    pub origin: Option<(usize, usize)>,
}

/// The sorted breakpoints `0 = c_0 ≤ c_1 ≤ … ≤ c_mn ≤ c_{mn+1} = p_max` and
/// the `mn+1` closed intervals between neighbours. Duplicate costs yield
/// zero-width intervals on purpose, keeping the agent count fixed at `mn+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    pub breakpoints: Vec<Breakpoint>,
    pub intervals: Vec<(f64, f64)>,
}

/// Sort the supply costs into breakpoints.
///
/// Ascending by cost; ties put the larger supplier index first, then the
/// larger consumer index. The exact order matters only for reproducibility —
/// any fixed tie order yields the same interval multiset.
pub fn build_intervals(market: &MarketParams) -> IntervalSet {
    let mut entries: Vec<(usize, usize)> = (0..market.m)
        .flat_map(|i| (0..market.n).map(move |j| (i, j)))
        .collect();
    entries.sort_by(|&(i1, j1), &(i2, j2)| {
        market.c[i1][j1]
            .total_cmp(&market.c[i2][j2])
            .then(i2.cmp(&i1))
            .then(j2.cmp(&j1))
    });

    let mut breakpoints = Vec::with_capacity(market.m * market.n + 2);
    breakpoints.push(Breakpoint {
        value: 0.0,
        origin: None,
    });
    for &(i, j) in &entries {
        breakpoints.push(Breakpoint {
            value: market.c[i][j],
            origin: Some((i, j)),
        });
    }
    breakpoints.push(Breakpoint {
        value: market.p_max,
        origin: None,
    });
    debug_assert!(breakpoints.windows(2).all(|w| w[0].value <= w[1].value));

    let intervals = breakpoints
        .windows(2)
        .map(|w| (w[0].value, w[1].value))
        .collect();
    IntervalSet {
        breakpoints,
        intervals,
    }
}

/// Index of the smallest bound, ties broken toward the smallest index.
/// Unbounded agents carry `-inf` and therefore win every tie against a
/// finite bound.
pub fn select_agent(lcb: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in lcb.iter().enumerate().skip(1) {
        if v < lcb[best] {
            best = k;
        }
    }
    best
}

/// Shared per-run machinery: the clock, the demand stream, and the log.
///
/// Agents consume periods exclusively through [`RunCtx::play`], which samples
/// demand, solves the allocation, charges the clock, and appends one log row.
/// Once the clock hits the horizon `play` refuses further periods, which is
/// how mid-batch truncation at the end of a run is implemented.
pub struct RunCtx<'a> {
    pub market: &'a MarketParams,
    pub model: &'a DemandModel,
    pub consts: &'a TheoremConstants,
    pub horizon: u64,
    pub t: u64,
    pub logs: Vec<StepLog>,
    pub lcb_snapshot: Vec<f64>,
    rng: ChaCha12Rng,
}

impl<'a> RunCtx<'a> {
    pub fn new(
        config: &'a ExperimentConfig,
        consts: &'a TheoremConstants,
        effective_seed: u64,
        bounds: usize,
    ) -> Self {
        RunCtx {
            market: &config.market,
            model: &config.demand,
            consts,
            horizon: config.horizon,
            t: 0,
            logs: Vec::with_capacity(config.horizon as usize),
            lcb_snapshot: vec![f64::NEG_INFINITY; bounds],
            rng: rng::run_rng(effective_seed),
        }
    }

    /// Play one period at `(inventory, price)` on behalf of dispatch `k`.
    /// Returns the realized demand and cost, or `None` when the horizon is
    /// spent.
    pub fn play(
        &mut self,
        k: usize,
        stage: u8,
        inventory: &[f64],
        price: f64,
    ) -> Option<(DemandVector, f64)> {
        if self.t >= self.horizon {
            return None;
        }
        self.t += 1;
        let demand = environment::sample_demand(self.model, price, &mut self.rng);
        let inv = Inventory::from_raw(inventory.to_vec());
        let alloc = transport::solve_allocation(&inv, &demand, price, self.market);
        let cost: f64 = self
            .market
            .gamma
            .iter()
            .zip(inventory)
            .map(|(g, i)| g * i)
            .sum::<f64>()
            + alloc.objective;
        self.logs.push(StepLog {
            t: self.t,
            k_hat: k,
            stage,
            price,
            inventory: inventory.to_vec(),
            demand: demand.values().to_vec(),
            allocation: alloc.x,
            realized_cost: cost,
            oracle_cost: f64::NAN,
            inst_regret: f64::NAN,
            lcb: self.lcb_snapshot.clone(),
        });
        Some((demand, cost))
    }
}

/// One meta-level dispatch, recorded for the structural checks.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchRecord {
    pub k: usize,
    pub stage: u8,
    pub periods: u64,
    pub t_after: u64,
    pub t_k_after: u64,
    pub w_hat_after: f64,
    pub delta_after: f64,
    pub bracket_after: (f64, f64),
    pub tau_after: u64,
    pub completed_epochs_after: u64,
    pub stage_after: u8,
}

/// Everything one run produces.
pub struct RunOutput {
    pub logs: Vec<StepLog>,
    pub dispatches: Vec<DispatchRecord>,
    pub agents: Vec<AgentState>,
}

/// Execute one full run on the given effective seed.
///
/// Initialization probes every agent (three periods each, in interval order),
/// then the selection loop runs until the clock reaches the horizon exactly.
/// A dispatch that would overshoot plays only the remaining periods; the
/// surplus samples are logged but trigger no learning update.
pub fn run(config: &ExperimentConfig, effective_seed: u64) -> RunOutput {
    let consts = theorem_constants(config);
    run_with_constants(config, &consts, effective_seed)
}

/// As [`run`], with caller-supplied constants (used by tests to shrink the
/// confidence radius).
pub fn run_with_constants(
    config: &ExperimentConfig,
    consts: &TheoremConstants,
    effective_seed: u64,
) -> RunOutput {
    let intervals = build_intervals(&config.market);
    let count = intervals.intervals.len();
    let mut ctx = RunCtx::new(config, consts, effective_seed, count);
    let mut states: Vec<AgentState> = Vec::with_capacity(count);
    for (k, interval) in intervals.intervals.iter().copied().enumerate() {
        states.push(agents::agent_init(k, interval, &mut ctx));
    }
    let mut lcb: Vec<f64> = states.iter().map(|a| a.lcb()).collect();
    let mut dispatches = Vec::new();

    while ctx.t < ctx.horizon {
        let k = select_agent(&lcb);
        ctx.lcb_snapshot.copy_from_slice(&lcb);
        let stage = states[k].stage;
        let periods = match stage {
            Stage::Search => agents::stage1_run_subepoch(&mut states[k], &mut ctx),
            Stage::Calibrate => agents::stage2_run(&mut states[k], &mut ctx),
            Stage::Exploit => agents::stage3_step(&mut states[k], &mut ctx),
        };
        for (i, a) in states.iter().enumerate() {
            lcb[i] = a.lcb();
        }
        let a = &states[k];
        dispatches.push(DispatchRecord {
            k,
            stage: stage.code(),
            periods,
            t_after: ctx.t,
            t_k_after: a.t_k,
            w_hat_after: a.w_hat,
            delta_after: a.delta,
            bracket_after: a.bracket,
            tau_after: a.tau,
            completed_epochs_after: a.completed_epochs,
            stage_after: a.stage.code(),
        });
        log::debug!(
            "dispatch k={k} stage={} periods={periods} t={}/{} lcb={:?}",
            stage.code(),
            ctx.t,
            ctx.horizon,
            lcb
        );
    }

    RunOutput {
        logs: ctx.logs,
        dispatches,
        agents: states,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::tests_support::two_interval_config;

    #[test]
    fn breakpoint_sort_follows_the_tie_rules() {
        let market = MarketParams {
            m: 2,
            n: 2,
            gamma: vec![0.0, 0.0],
            c: vec![vec![2.0, 1.0], vec![1.0, 3.0]],
            p_max: 4.0,
            i_max: 1.0,
            gamma_max: 1.0,
            a_max: 1.0,
            b_max: 1.0,
        };
        let set = build_intervals(&market);
        let origins: Vec<Option<(usize, usize)>> =
            set.breakpoints.iter().map(|b| b.origin).collect();
        // Cost ties at 1.0: the larger supplier index comes first.
        assert_eq!(
            origins,
            vec![
                None,
                Some((1, 0)),
                Some((0, 1)),
                Some((0, 0)),
                Some((1, 1)),
                None
            ]
        );
        let values: Vec<f64> = set.breakpoints.iter().map(|b| b.value).collect();
        assert_eq!(values, vec![0.0, 1.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(set.intervals.len(), 5);
        assert_eq!(set.intervals[1], (1.0, 1.0)); // zero width, kept
    }

    #[test]
    fn equal_costs_order_by_indices_only() {
        let market = MarketParams {
            m: 2,
            n: 2,
            gamma: vec![0.0, 0.0],
            c: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            p_max: 1.0,
            i_max: 1.0,
            gamma_max: 1.0,
            a_max: 1.0,
            b_max: 1.0,
        };
        let set = build_intervals(&market);
        let origins: Vec<(usize, usize)> = set
            .breakpoints
            .iter()
            .filter_map(|b| b.origin)
            .collect();
        assert_eq!(origins, vec![(1, 1), (1, 0), (0, 1), (0, 0)]);
    }

    #[test]
    fn single_cost_splits_in_two() {
        let market = MarketParams {
            m: 1,
            n: 1,
            gamma: vec![0.0],
            c: vec![vec![0.5]],
            p_max: 1.0,
            i_max: 1.0,
            gamma_max: 1.0,
            a_max: 1.0,
            b_max: 1.0,
        };
        let set = build_intervals(&market);
        assert_eq!(set.intervals, vec![(0.0, 0.5), (0.5, 1.0)]);
    }

    #[test]
    fn selection_prefers_unbounded_then_smallest_index() {
        assert_eq!(select_agent(&[f64::NEG_INFINITY, -1.0, -2.0]), 0);
        assert_eq!(select_agent(&[-1.0, -3.0, -2.0]), 1);
        assert_eq!(select_agent(&[-2.0, -2.0]), 0);
        assert_eq!(
            select_agent(&[f64::NEG_INFINITY, f64::NEG_INFINITY, -5.0]),
            0
        );
    }

    #[test]
    fn clock_is_conserved_and_probes_come_first() {
        let cfg = two_interval_config(10);
        let out = run(&cfg, 3);
        assert_eq!(out.logs.len(), 10);
        for (i, row) in out.logs.iter().enumerate() {
            assert_eq!(row.t, i as u64 + 1);
        }
        // Two agents, three probes each.
        assert!(out.logs[..6].iter().all(|r| r.stage == 0));
        assert_eq!(out.logs[0].k_hat, 0);
        assert_eq!(out.logs[3].k_hat, 1);
        let total: u64 = out.agents.iter().map(|a| a.t_k).sum();
        assert_eq!(total, 10);
    }

    #[test]
    fn identical_seeds_reproduce_identical_runs() {
        let cfg = two_interval_config(200);
        let a = run(&cfg, 42);
        let b = run(&cfg, 42);
        assert_eq!(a.logs.len(), b.logs.len());
        for (x, y) in a.logs.iter().zip(&b.logs) {
            assert_eq!(x.t, y.t);
            assert_eq!(x.price.to_bits(), y.price.to_bits());
            assert_eq!(x.realized_cost.to_bits(), y.realized_cost.to_bits());
        }
        assert_eq!(a.dispatches, b.dispatches);
        let c = run(&cfg, 43);
        assert!(
            a.logs
                .iter()
                .zip(&c.logs)
                .any(|(x, y)| x.realized_cost.to_bits() != y.realized_cost.to_bits()),
            "different seeds should diverge"
        );
    }

    #[test]
    fn stages_never_regress() {
        let cfg = two_interval_config(2000);
        let out = run(&cfg, 9);
        let mut last = vec![0u8; out.agents.len()];
        for d in &out.dispatches {
            assert!(d.stage_after >= d.stage, "stage regressed in dispatch");
            assert!(d.stage >= last[d.k], "agent resumed at an earlier stage");
            last[d.k] = d.stage_after;
        }
    }
}
