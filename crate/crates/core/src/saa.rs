//! Scenario-weighted inventory optimization and the exact cost oracles.
//!
//! The learner's inventory subproblem — minimize the average of recorded
//! one-period costs over the inventory simplex — is one linear program with a
//! separate allocation block per *distinct* recorded demand. Identical
//! realizations are merged with weights first, so under k-atom noise the
//! program keeps k blocks no matter how long the sub-epoch ran.
//!
//! The same program evaluated with the true atom probabilities gives the
//! exact expected cost `Q` and the optimistic curve `W(p) = min_I Q(I, p)`,
//! which is what the evaluator uses as ground truth.

use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::environment::{self, DemandModel, Noise, ScenarioSet};
use crate::market::{DemandVector, Inventory, MarketParams};
use crate::meta;
use crate::simplex;
use crate::transport;

#[derive(Debug, Error)]
pub enum SaaError {
    #[error("exact oracles need finite-support noise; use the Monte Carlo fallback")]
    ContinuousNoise,
    #[error("aggregated cost needs at least one scenario")]
    Empty,
}

/// A weighted bag of demand scenarios observed at one fixed price.
#[derive(Debug, Clone)]
pub struct AggregatedCost {
    pub price: f64,
    /// Distinct demand realizations with positive weights.
    pub entries: Vec<(DemandVector, f64)>,
    /// Normalizer; recorded sets use the period count, oracles use 1.
    pub total_weight: f64,
}

impl AggregatedCost {
    pub fn from_scenarios(set: &ScenarioSet) -> Self {
        AggregatedCost {
            price: set.price(),
            entries: set
                .entries()
                .iter()
                .map(|(d, w)| (d.clone(), *w as f64))
                .collect(),
            total_weight: set.total() as f64,
        }
    }

    /// The exact expectation under a finite-support model at price `p`.
    pub fn from_model(model: &DemandModel, price: f64) -> Result<Self, SaaError> {
        let Noise::FiniteSupport { atoms } = &model.noise else {
            return Err(SaaError::ContinuousNoise);
        };
        let mean = model.mean_demand(price);
        let entries = atoms
            .iter()
            .map(|atom| {
                let d: Vec<f64> = mean
                    .iter()
                    .zip(&atom.offset)
                    .map(|(m, o)| (m + o).max(0.0))
                    .collect();
                (DemandVector::from_raw(d), atom.prob)
            })
            .collect();
        Ok(AggregatedCost {
            price,
            entries,
            total_weight: 1.0,
        })
    }

    /// Evaluate the aggregated cost at a fixed inventory by re-solving each
    /// scenario's allocation. Used to cross-check the joint program.
    pub fn evaluate(&self, inventory: &Inventory, market: &MarketParams) -> f64 {
        let inv_cost: f64 = market
            .gamma
            .iter()
            .zip(inventory.levels())
            .map(|(g, i)| g * i)
            .sum();
        let alloc: f64 = self
            .entries
            .iter()
            .map(|(d, w)| {
                w / self.total_weight
                    * transport::solve_allocation(inventory, d, self.price, market).objective
            })
            .sum();
        inv_cost + alloc
    }
}

/// Minimize the aggregated cost over `{I ≥ 0, ‖I‖₁ ≤ i_max}`.
///
/// One joint program: inventory variables plus one allocation block per
/// distinct scenario, every block tied to the same inventory. The budget row
/// is imposed even though the average of allocation values alone could make
/// the program unbounded without it.
pub fn saa_argmin_inventory(agg: &AggregatedCost, market: &MarketParams) -> (Inventory, f64) {
    assert!(!agg.entries.is_empty(), "aggregated cost with no scenarios");
    let (m, n) = (market.m, market.n);
    let price = agg.price;

    // Profitable edges at this price; unprofitable ones never ship.
    let edges: Vec<(usize, usize, f64)> = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter_map(|(i, j)| {
            let cost = market.c[i][j] - price;
            (cost < 0.0).then_some((i, j, cost))
        })
        .collect();

    if edges.is_empty() {
        // Inventory only ever costs; stock nothing.
        return (Inventory::from_raw(vec![0.0; m]), 0.0);
    }

    let k = agg.entries.len();
    let ne = edges.len();
    let vars = m + k * ne;
    let mut c = vec![0.0f64; vars];
    c[..m].copy_from_slice(&market.gamma);
    for (s, (_, w)) in agg.entries.iter().enumerate() {
        let scale = w / agg.total_weight;
        for (e, &(_, _, cost)) in edges.iter().enumerate() {
            c[m + s * ne + e] = scale * cost;
        }
    }

    // Rows: budget, then per scenario m coupling rows and n demand rows.
    let mut rows = Vec::with_capacity(1 + k * (m + n));
    let mut b = Vec::with_capacity(rows.capacity());
    let mut budget = vec![0.0f64; vars];
    budget[..m].fill(1.0);
    rows.push(budget);
    b.push(market.i_max);
    for (s, (d, _)) in agg.entries.iter().enumerate() {
        for i in 0..m {
            let mut row = vec![0.0f64; vars];
            row[i] = -1.0;
            for (e, &(ei, _, _)) in edges.iter().enumerate() {
                if ei == i {
                    row[m + s * ne + e] = 1.0;
                }
            }
            rows.push(row);
            b.push(0.0);
        }
        for j in 0..n {
            let mut row = vec![0.0f64; vars];
            for (e, &(_, ej, _)) in edges.iter().enumerate() {
                if ej == j {
                    row[m + s * ne + e] = 1.0;
                }
            }
            rows.push(row);
            b.push(d.values()[j].max(0.0));
        }
    }

    let sol = simplex::solve_min(&c, &rows, &b);
    let inv = Inventory::from_raw(sol.x[..m].iter().map(|v| v.max(0.0)).collect());
    (inv, sol.objective)
}

/// Exact expected one-period cost at `(I, p)` by atom enumeration.
pub fn exact_q(
    inventory: &Inventory,
    price: f64,
    model: &DemandModel,
    market: &MarketParams,
) -> Result<f64, SaaError> {
    let agg = AggregatedCost::from_model(model, price)?;
    Ok(agg.evaluate(inventory, market))
}

/// Unbiased Monte Carlo estimate of the expected cost with its standard error.
pub fn monte_carlo_q(
    inventory: &Inventory,
    price: f64,
    model: &DemandModel,
    market: &MarketParams,
    samples: u64,
    rng: &mut ChaCha12Rng,
) -> (f64, f64) {
    assert!(samples >= 100, "need at least 100 samples");
    let values: Vec<f64> = (0..samples)
        .map(|_| {
            let d = environment::sample_demand(model, price, rng);
            environment::realized_cost(market, inventory, price, &d)
        })
        .collect();
    // Identical samples have exactly their common value as mean and zero
    // spread; computing this through the running sums would leave rounding
    // dust on a deterministic model.
    if values
        .iter()
        .all(|v| v.to_bits() == values[0].to_bits())
    {
        return (values[0], 0.0);
    }
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let var = ss / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// The optimistic cost `W(p) = min_I Q(I, p)` with its minimizer.
pub fn exact_w(
    price: f64,
    model: &DemandModel,
    market: &MarketParams,
) -> Result<(f64, Inventory), SaaError> {
    let agg = AggregatedCost::from_model(model, price)?;
    let (inv, value) = saa_argmin_inventory(&agg, market);
    Ok((value, inv))
}

/// The local optimum of one price interval.
#[derive(Debug, Clone)]
pub struct IntervalOptimum {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    pub p_star: f64,
    pub w_star: f64,
}

/// Global and per-interval optima of the optimistic cost curve.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub p_star: f64,
    pub i_star: Inventory,
    pub w_star: f64,
    pub per_interval: Vec<IntervalOptimum>,
}

/// Golden-section minimization on `[lo, hi]` down to width `xtol`.
/// Exact on convex (and plateau-convex) sections; callers bracket first when
/// the curve may carry interior kinks.
pub fn golden_section_min<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    xtol: f64,
) -> (f64, f64) {
    debug_assert!(hi >= lo);
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = lo;
    let mut b = hi;
    let mut best = (lo, f(lo));
    let fb_end = f(hi);
    if fb_end < best.1 {
        best = (hi, fb_end);
    }
    if b - a <= xtol {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        return if fm < best.1 { (mid, fm) } else { best };
    }
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > xtol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        let (xc, fc) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
        if fc < best.1 {
            best = (xc, fc);
        }
    }
    best
}

/// Locate the global optimum of the optimistic cost curve.
///
/// Each breakpoint interval is scanned on a coarse grid to bracket its
/// minimum, then refined by golden section to `xtol` (default `1e-6·p_max`).
/// The grid pass guards against interior kinks that the interval structure
/// does not capture (inventory-activation corners), where the curve can stop
/// being convex.
pub fn global_optimum(
    model: &DemandModel,
    market: &MarketParams,
    xtol: Option<f64>,
) -> Result<OracleResult, SaaError> {
    if !model.is_finite_support() {
        return Err(SaaError::ContinuousNoise);
    }
    let xtol = xtol.unwrap_or(1e-6 * market.p_max);
    let intervals = meta::build_intervals(market);
    let mut per_interval = Vec::with_capacity(intervals.intervals.len());
    for (k, (lo, hi)) in intervals.intervals.iter().copied().enumerate() {
        let mut eval = |p: f64| exact_w(p, model, market).expect("finite support checked").0;
        let (p_star, w_star) = if hi - lo <= xtol {
            let mid = 0.5 * (lo + hi);
            (mid, eval(mid))
        } else {
            // Coarse bracket first, then golden refinement inside it.
            const GRID: usize = 32;
            let step = (hi - lo) / GRID as f64;
            let mut best_i = 0;
            let mut best_v = f64::INFINITY;
            for g in 0..=GRID {
                let v = eval(lo + g as f64 * step);
                if v < best_v {
                    best_v = v;
                    best_i = g;
                }
            }
            let bl = lo + step * best_i.saturating_sub(1) as f64;
            let bh = (lo + step * (best_i + 1) as f64).min(hi);
            let (p_g, w_g) = golden_section_min(&mut eval, bl, bh, xtol);
            if w_g < best_v {
                (p_g, w_g)
            } else {
                (lo + best_i as f64 * step, best_v)
            }
        };
        per_interval.push(IntervalOptimum {
            k,
            lo,
            hi,
            p_star,
            w_star,
        });
    }
    let best = per_interval
        .iter()
        .min_by(|a, b| a.w_star.total_cmp(&b.w_star))
        .expect("at least one interval");
    let (w_star, i_star) = {
        let (v, inv) = exact_w(best.p_star, model, market)?;
        (v.min(best.w_star), inv)
    };
    Ok(OracleResult {
        p_star: best.p_star,
        i_star,
        w_star,
        per_interval,
    })
}

/// Exact expected cost with memoization on the decision pair, for regret
/// accounting over logs where decisions repeat for long stretches.
pub struct QOracle<'a> {
    model: &'a DemandModel,
    market: &'a MarketParams,
    last: Option<(Vec<u64>, u64, f64)>,
    cache: std::collections::HashMap<(Vec<u64>, u64), f64>,
}

impl<'a> QOracle<'a> {
    pub fn new(model: &'a DemandModel, market: &'a MarketParams) -> Result<Self, SaaError> {
        if !model.is_finite_support() {
            return Err(SaaError::ContinuousNoise);
        }
        Ok(QOracle {
            model,
            market,
            last: None,
            cache: std::collections::HashMap::new(),
        })
    }

    pub fn eval(&mut self, inventory: &[f64], price: f64) -> f64 {
        let key_i: Vec<u64> = inventory.iter().map(|v| v.to_bits()).collect();
        let key_p = price.to_bits();
        if let Some((ki, kp, v)) = &self.last {
            if *kp == key_p && *ki == key_i {
                return *v;
            }
        }
        if let Some(v) = self.cache.get(&(key_i.clone(), key_p)) {
            self.last = Some((key_i, key_p, *v));
            return *v;
        }
        let inv = Inventory::from_raw(inventory.to_vec());
        let v = exact_q(&inv, price, self.model, self.market).expect("finite support checked");
        self.cache.insert((key_i.clone(), key_p), v);
        self.last = Some((key_i, key_p, v));
        v
    }
}

/// Closed-form optimistic cost of the noiseless single-edge market with zero
/// supply cost: stock nothing unless the price beats the inventory cost.
/// Test oracle only.
pub fn single_edge_noiseless_w(gamma: f64, a: f64, b: f64, p: f64) -> f64 {
    ((gamma - p) * (a - b * p)).min(0.0)
}
