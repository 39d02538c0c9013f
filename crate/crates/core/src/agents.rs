//! Per-interval learners.
//!
//! Each agent owns one breakpoint interval of the price range and works
//! through three stages:
//!
//! 1. **Search**: trisection over a shrinking bracket `[L, U]`. The three
//!    quarter points are each played for a doubling number of periods per
//!    sub-epoch; once two of the estimated values separate by more than four
//!    error bars, a quarter of the bracket is cut away and a new epoch starts.
//!    The search stops when the bracket is narrower than one part in the
//!    horizon.
//! 2. **Calibrate**: the chosen price is replayed in doubling rounds until the
//!    error bar is guaranteed to have halved (or, when the search never
//!    produced a finite bar, for a fixed logarithmic budget).
//! 3. **Exploit**: play the chosen pair forever, folding each realized cost
//!    into the running estimate so the meta-strategy keeps an honest bound.
//!
//! Estimates are sample averages of the recorded scenarios; the inventory
//! played at a price is always the scenario-average minimizer from the
//! previous batch at (or nearest to) that price.

use crate::environment::ScenarioSet;
use crate::market::Inventory;
use crate::meta::RunCtx;
use crate::saa::{saa_argmin_inventory, AggregatedCost};

/// Multiplier turning an agent's error bar into its meta-selection bound.
pub const LCB_RADIUS: f64 = 34.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    /// Trisection search over the bracket.
    Search,
    /// Complementary sampling at the settled price.
    Calibrate,
    /// Pure exploitation with running updates.
    Exploit,
}

impl Stage {
    pub fn code(self) -> u8 {
        match self {
            Stage::Search => 1,
            Stage::Calibrate => 2,
            Stage::Exploit => 3,
        }
    }
}

/// One of the three active prices of a search epoch, with the inventory the
/// agent currently plays there and the latest scenario-average value.
#[derive(Debug, Clone)]
pub struct QuarterPoint {
    pub price: f64,
    pub inventory: Vec<f64>,
    pub q_hat: f64,
}

/// Full learning state of one interval agent.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub k: usize,
    pub interval: (f64, f64),
    pub stage: Stage,
    /// Current search bracket `[L, U]`; shrinks by a quarter per epoch.
    pub bracket: (f64, f64),
    /// Epoch counter (1-based).
    pub tau: u64,
    /// Sub-epoch counter within the epoch (1-based; batch size is `2^s`).
    pub s: u32,
    /// Quarter points in price order: ¼, ½ (midpoint), ¾.
    pub quarters: [QuarterPoint; 3],
    /// Best value estimate; paired with `delta` it forms the agent's bound.
    pub w_hat: f64,
    /// Error bar; infinite until the first no-separation sub-epoch completes.
    pub delta: f64,
    /// Periods this agent has consumed.
    pub t_k: u64,
    /// Number of bracket cuts performed so far.
    pub completed_epochs: u64,
    /// Settled price/inventory once the search ends.
    pub p_star: f64,
    pub i_star: Vec<f64>,
    /// Running value estimate at the settled pair.
    pub q_star: f64,
    /// Calibration sample target and its doubling-round count.
    pub n_k2: u64,
    pub r_k: u32,
    /// Samples behind `q_star` during exploitation.
    pub n_k3: u64,
    /// Last scenario-average minimizer per visited price, for warm starts.
    warm: Vec<(f64, Vec<f64>)>,
}

fn quarter_prices(lo: f64, hi: f64) -> [f64; 3] {
    [
        (3.0 * lo + hi) / 4.0,
        (lo + hi) / 2.0,
        (lo + 3.0 * hi) / 4.0,
    ]
}

impl AgentState {
    /// The meta-selection bound `w_hat - 34·delta`; unbounded agents are
    /// infinitely optimistic.
    pub fn lcb(&self) -> f64 {
        if self.delta.is_finite() {
            self.w_hat - LCB_RADIUS * self.delta
        } else {
            f64::NEG_INFINITY
        }
    }

    fn remember(&mut self, price: f64, inventory: &[f64]) {
        if let Some((_, inv)) = self
            .warm
            .iter_mut()
            .find(|(p, _)| p.to_bits() == price.to_bits())
        {
            inv.clear();
            inv.extend_from_slice(inventory);
        } else {
            self.warm.push((price, inventory.to_vec()));
        }
    }

    /// Inventory for a price the agent has not optimized yet: the minimizer
    /// from the nearest visited price, or all ones before any visit.
    fn warm_inventory(&self, price: f64, m: usize) -> Vec<f64> {
        self.warm
            .iter()
            .min_by(|(pa, _), (pb, _)| {
                (pa - price)
                    .abs()
                    .total_cmp(&(pb - price).abs())
                    .then(pa.total_cmp(pb))
            })
            .map(|(_, inv)| inv.clone())
            .unwrap_or_else(|| vec![1.0; m])
    }
}

/// Set up agent `k` on `interval`, probing each quarter point once with the
/// all-ones inventory (three periods). Intervals narrower than `1/T` skip the
/// search entirely and settle on the midpoint immediately.
pub fn agent_init(k: usize, interval: (f64, f64), ctx: &mut RunCtx) -> AgentState {
    let m = ctx.market.m;
    let (lo, hi) = interval;
    let prices = quarter_prices(lo, hi);
    let mut state = AgentState {
        k,
        interval,
        stage: Stage::Search,
        bracket: interval,
        tau: 1,
        s: 1,
        quarters: prices.map(|price| QuarterPoint {
            price,
            inventory: vec![1.0; m],
            q_hat: 0.0,
        }),
        w_hat: 0.0,
        delta: f64::INFINITY,
        t_k: 0,
        completed_epochs: 0,
        p_star: prices[1],
        i_star: vec![1.0; m],
        q_star: 0.0,
        n_k2: 0,
        r_k: 0,
        n_k3: 0,
        warm: Vec::new(),
    };

    for idx in 0..3 {
        let price = state.quarters[idx].price;
        let probe = Inventory::ones(m);
        let Some((demand, _)) = ctx.play(k, 0, probe.levels(), price) else {
            return state;
        };
        state.t_k += 1;
        let mut set = ScenarioSet::new(price);
        set.record(&demand);
        let (inv, q_hat) = saa_argmin_inventory(&AggregatedCost::from_scenarios(&set), ctx.market);
        state.remember(price, inv.levels());
        state.quarters[idx].inventory = inv.levels().to_vec();
        state.quarters[idx].q_hat = q_hat;
    }

    if hi - lo < 1.0 / ctx.horizon as f64 {
        state.stage = Stage::Calibrate;
        state.p_star = state.quarters[1].price;
        state.i_star = state.quarters[1].inventory.clone();
    }
    state
}

/// Run one search sub-epoch: `2^s` periods at each quarter point, refreshed
/// estimates, then the four separation tests. Returns periods consumed; a
/// horizon truncation mid-batch performs no learning update at all.
pub fn stage1_run_subepoch(state: &mut AgentState, ctx: &mut RunCtx) -> u64 {
    debug_assert_eq!(state.stage, Stage::Search);
    let n_s = 1u64 << state.s;
    let mut played = 0;

    for idx in 0..3 {
        let price = state.quarters[idx].price;
        let inventory = state.quarters[idx].inventory.clone();
        let mut set = ScenarioSet::new(price);
        for _ in 0..n_s {
            let Some((demand, _)) = ctx.play(state.k, 1, &inventory, price) else {
                return played; // truncated: samples are logged but unused
            };
            state.t_k += 1;
            played += 1;
            set.record(&demand);
        }
        let (inv, q_hat) = saa_argmin_inventory(&AggregatedCost::from_scenarios(&set), ctx.market);
        state.remember(price, inv.levels());
        state.quarters[idx].inventory = inv.levels().to_vec();
        state.quarters[idx].q_hat = q_hat;
    }

    let bar = ctx.consts.delta_k / (2.0 * (n_s as f64).sqrt());
    let sep = 4.0 * bar;
    let (q_a, q_c, q_b) = (
        state.quarters[0].q_hat,
        state.quarters[1].q_hat,
        state.quarters[2].q_hat,
    );
    let (lo, hi) = state.bracket;
    let a = state.quarters[0].price;
    let b = state.quarters[2].price;

    // In test order: the two outer comparisons, then the midpoint against
    // each outer point. Each cut removes exactly one quarter of the bracket.
    let cut = if q_a > q_b + sep {
        Some((a, hi))
    } else if q_a < q_b - sep {
        Some((lo, b))
    } else if q_c < q_a - sep {
        Some((a, hi))
    } else if q_c < q_b - sep {
        Some((lo, b))
    } else {
        None
    };

    match cut {
        Some((new_lo, new_hi)) => {
            // Separation: move the bracket without touching w_hat or delta.
            state.completed_epochs += 1;
            state.bracket = (new_lo, new_hi);
            if new_hi - new_lo > 1.0 / ctx.horizon as f64 {
                state.tau += 1;
                state.s = 1;
                let m = ctx.market.m;
                for (idx, price) in quarter_prices(new_lo, new_hi).into_iter().enumerate() {
                    let inventory = state.warm_inventory(price, m);
                    state.quarters[idx] = QuarterPoint {
                        price,
                        inventory,
                        q_hat: 0.0,
                    };
                }
            } else {
                // Narrow enough: settle on the current midpoint.
                state.p_star = state.quarters[1].price;
                state.i_star = state.quarters[1].inventory.clone();
                state.stage = Stage::Calibrate;
            }
        }
        None => {
            if bar < state.delta {
                state.delta = bar;
                state.w_hat = q_a.min(q_c).min(q_b);
            }
            state.s += 1;
        }
    }
    played
}

/// Run the calibration stage to completion: doubling rounds at the settled
/// price, refreshing the inventory against all samples gathered in this
/// stage, then the final bound update. Returns periods consumed.
pub fn stage2_run(state: &mut AgentState, ctx: &mut RunCtx) -> u64 {
    debug_assert_eq!(state.stage, Stage::Calibrate);
    let delta_k = ctx.consts.delta_k;
    let n_k2 = if state.delta.is_finite() {
        (4.0 * (delta_k / state.delta).powi(2)).ceil() as u64
    } else {
        ctx.consts.n0
    };
    let n_k2 = n_k2.max(2);
    // Integer-exact ceil(log2).
    let r_k = (64 - (n_k2 - 1).leading_zeros()).max(1);
    state.n_k2 = n_k2;
    state.r_k = r_k;

    let price = state.p_star;
    let mut inventory = state.i_star.clone();
    let mut set = ScenarioSet::new(price);
    let mut value = f64::NAN;
    let mut played = 0;

    for r in 1..=r_k {
        let batch = 1u64 << r;
        for _ in 0..batch {
            let Some((demand, _)) = ctx.play(state.k, 2, &inventory, price) else {
                return played; // truncated: stage left incomplete on purpose
            };
            state.t_k += 1;
            played += 1;
            set.record(&demand);
        }
        let (inv, v) = saa_argmin_inventory(&AggregatedCost::from_scenarios(&set), ctx.market);
        state.remember(price, inv.levels());
        inventory = inv.levels().to_vec();
        value = v;
    }

    state.i_star = inventory;
    state.q_star = value;
    state.w_hat = value - ctx.consts.l_w / ctx.horizon as f64;
    state.delta = delta_k / (n_k2 as f64).sqrt();
    state.n_k3 = n_k2;
    state.stage = Stage::Exploit;
    played
}

/// Play the settled pair for one period and fold the realized cost into the
/// running estimate.
pub fn stage3_step(state: &mut AgentState, ctx: &mut RunCtx) -> u64 {
    debug_assert_eq!(state.stage, Stage::Exploit);
    let inventory = state.i_star.clone();
    let Some((_, cost)) = ctx.play(state.k, 3, &inventory, state.p_star) else {
        return 0;
    };
    state.t_k += 1;
    let n = state.n_k3 as f64;
    state.q_star = (n * state.q_star + cost) / (n + 1.0);
    state.n_k3 += 1;
    state.w_hat = state.q_star - ctx.consts.l_w / ctx.horizon as f64;
    state.delta = ctx.consts.delta_k / (state.n_k3 as f64).sqrt();
    1
}
