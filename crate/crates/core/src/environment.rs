//! Ground-truth demand generation and realized per-period costs.
//!
//! This is the only module that reads the hidden demand parameters during a
//! learning run. Demand at price `p` is `a - b·p + N` with zero-mean noise
//! drawn i.i.d. across periods. Models are rejected at construction unless
//! the noise support keeps every realizable demand nonnegative — clamping at
//! zero would silently break both the zero-mean property and the linearity
//! the analysis rests on, so it is never done.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use thiserror::Error;

use crate::market::{DemandVector, Inventory, MarketParams};
use crate::transport;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid demand model:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

/// One joint noise atom: an offset vector applied to all consumers at once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseAtom {
    pub offset: Vec<f64>,
    pub prob: f64,
}

/// The market noise specification.
///
/// `FiniteSupport` permits arbitrary joint atoms (correlated across
/// consumers); `TruncatedGaussian` is coordinate-independent and is
/// re-centered after truncation so the noise mean is exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Noise {
    FiniteSupport { atoms: Vec<NoiseAtom> },
    TruncatedGaussian { sigma: Vec<f64>, lo: Vec<f64>, hi: Vec<f64> },
}

/// The unknown-to-the-learner demand line `D = a - b·p + N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandModel {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub noise: Noise,
}

fn normal_pdf(x: f64) -> f64 {
    (-(x * x) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Mean of a standard-truncation normal `N(0, σ²)` restricted to `[lo, hi]`,
/// used to re-center samples so the corrected noise has mean exactly zero.
fn truncated_mean(sigma: f64, lo: f64, hi: f64) -> f64 {
    let (alpha, beta) = (lo / sigma, hi / sigma);
    let z = normal_cdf(beta) - normal_cdf(alpha);
    sigma * (normal_pdf(alpha) - normal_pdf(beta)) / z
}

impl DemandModel {
    /// Every violated model invariant against the declared market bounds.
    pub fn violations(&self, market: &MarketParams) -> Vec<String> {
        let mut errs = Vec::new();
        let n = market.n;
        if self.a.len() != n {
            errs.push(format!("a has length {} but n = {n}", self.a.len()));
        }
        if self.b.len() != n {
            errs.push(format!("b has length {} but n = {n}", self.b.len()));
        }
        for (j, &v) in self.a.iter().enumerate() {
            if !(v >= 0.0) {
                errs.push(format!("a[{j}] is negative ({v})"));
            } else if v > market.a_max {
                errs.push(format!("a[{j}] exceeds a_max ({v} > {})", market.a_max));
            }
        }
        for (j, &v) in self.b.iter().enumerate() {
            if !(v >= 0.0) {
                errs.push(format!("b[{j}] is negative ({v})"));
            } else if v > market.b_max {
                errs.push(format!("b[{j}] exceeds b_max ({v} > {})", market.b_max));
            }
        }
        if self.a.len() != n || self.b.len() != n {
            return errs; // support checks need consistent lengths
        }
        match &self.noise {
            Noise::FiniteSupport { atoms } => {
                if atoms.is_empty() {
                    errs.push("finite-support noise needs at least one atom".into());
                    return errs;
                }
                let mut total = 0.0;
                let mut mean = vec![0.0f64; n];
                for (k, atom) in atoms.iter().enumerate() {
                    if atom.offset.len() != n {
                        errs.push(format!(
                            "atom {k} offset has length {} but n = {n}",
                            atom.offset.len()
                        ));
                        return errs;
                    }
                    if !(atom.prob > 0.0) {
                        errs.push(format!("atom {k} probability must be positive"));
                    }
                    total += atom.prob;
                    for (j, &o) in atom.offset.iter().enumerate() {
                        mean[j] += atom.prob * o;
                    }
                }
                if (total - 1.0).abs() > 1e-12 {
                    errs.push(format!("atom probabilities sum to {total}, not 1"));
                }
                for (j, &mj) in mean.iter().enumerate() {
                    if mj.abs() > 1e-12 {
                        errs.push(format!("noise mean in coordinate {j} is {mj}, not 0"));
                    }
                }
                for j in 0..n {
                    let min_off = atoms
                        .iter()
                        .map(|a| a.offset[j])
                        .fold(f64::INFINITY, f64::min);
                    let worst = self.a[j] - self.b[j] * market.p_max + min_off;
                    if worst < -1e-12 {
                        errs.push(format!(
                            "support infeasible: demand {j} can reach {worst} at p_max"
                        ));
                    }
                }
            }
            Noise::TruncatedGaussian { sigma, lo, hi } => {
                for (name, v) in [("sigma", sigma), ("lo", lo), ("hi", hi)] {
                    if v.len() != n {
                        errs.push(format!("{name} has length {} but n = {n}", v.len()));
                        return errs;
                    }
                }
                for j in 0..n {
                    if !(sigma[j] > 0.0) {
                        errs.push(format!("sigma[{j}] must be positive"));
                        continue;
                    }
                    if !(lo[j] < hi[j]) {
                        errs.push(format!("truncation bounds [{}, {}] empty at {j}", lo[j], hi[j]));
                        continue;
                    }
                    let shift = truncated_mean(sigma[j], lo[j], hi[j]);
                    let worst = self.a[j] - self.b[j] * market.p_max + lo[j] - shift;
                    if worst < -1e-12 {
                        errs.push(format!(
                            "support infeasible: demand {j} can reach {worst} at p_max"
                        ));
                    }
                }
            }
        }
        errs
    }

    pub fn validate(&self, market: &MarketParams) -> Result<(), ModelError> {
        let errs = self.violations(market);
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Invalid(errs))
        }
    }

    pub fn is_finite_support(&self) -> bool {
        matches!(self.noise, Noise::FiniteSupport { .. })
    }

    /// Mean demand at price `p`, coordinatewise `a - b·p`.
    pub fn mean_demand(&self, p: f64) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(aj, bj)| aj - bj * p)
            .collect()
    }
}

/// Draw one realized demand vector at price `p`.
pub fn sample_demand(model: &DemandModel, p: f64, rng: &mut ChaCha12Rng) -> DemandVector {
    let mean = model.mean_demand(p);
    let d = match &model.noise {
        Noise::FiniteSupport { atoms } => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = atoms.len() - 1;
            for (k, atom) in atoms.iter().enumerate() {
                acc += atom.prob;
                if u < acc {
                    chosen = k;
                    break;
                }
            }
            mean.iter()
                .zip(&atoms[chosen].offset)
                .map(|(m, o)| m + o)
                .collect()
        }
        Noise::TruncatedGaussian { sigma, lo, hi } => mean
            .iter()
            .enumerate()
            .map(|(j, m)| {
                let normal = Normal::new(0.0, sigma[j]).expect("validated sigma");
                let z = loop {
                    let z = normal.sample(rng);
                    if z >= lo[j] && z <= hi[j] {
                        break z;
                    }
                };
                m + z - truncated_mean(sigma[j], lo[j], hi[j])
            })
            .collect(),
    };
    DemandVector::from_raw(d)
}

/// Replace the noise by `samples` equally weighted empirical atoms drawn from
/// it. This is the Monte Carlo fallback the evaluator uses when the model has
/// no finite support: every exact oracle then runs on the empirical
/// distribution with common random numbers. The sample mean of the atoms is
/// only approximately zero, so the result intentionally skips validation.
pub fn empirical_finite_support(
    model: &DemandModel,
    samples: u64,
    rng: &mut ChaCha12Rng,
) -> DemandModel {
    let atoms = (0..samples)
        .map(|_| {
            let d = sample_demand(model, 0.0, rng);
            NoiseAtom {
                offset: d
                    .values()
                    .iter()
                    .zip(&model.a)
                    .map(|(dj, aj)| dj - aj)
                    .collect(),
                prob: 1.0 / samples as f64,
            }
        })
        .collect();
    DemandModel {
        a: model.a.clone(),
        b: model.b.clone(),
        noise: Noise::FiniteSupport { atoms },
    }
}

/// The cost actually incurred in one period: inventory cost plus the optimal
/// allocation value against the realized demand.
pub fn realized_cost(
    market: &MarketParams,
    inventory: &Inventory,
    price: f64,
    demand: &DemandVector,
) -> f64 {
    let inv_cost: f64 = market
        .gamma
        .iter()
        .zip(inventory.levels())
        .map(|(g, i)| g * i)
        .sum();
    inv_cost + transport::solve_allocation(inventory, demand, price, market).objective
}

/// Demand realizations observed at one price, with identical draws merged.
///
/// Merging keys on the exact bit pattern of the demand vector: under
/// finite-support noise the same atom always reproduces the same floats, so a
/// set never holds more distinct entries than the noise has atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    price: f64,
    entries: Vec<(DemandVector, u64)>,
    total: u64,
}

impl ScenarioSet {
    pub fn new(price: f64) -> Self {
        ScenarioSet {
            price,
            entries: Vec::new(),
            total: 0,
        }
    }

    pub fn record(&mut self, demand: &DemandVector) {
        self.total += 1;
        let key = demand.values();
        for (d, w) in self.entries.iter_mut() {
            if d.values().len() == key.len()
                && d.values()
                    .iter()
                    .zip(key)
                    .all(|(a, b)| a.to_bits() == b.to_bits())
            {
                *w += 1;
                return;
            }
        }
        self.entries.push((demand.clone(), 1));
    }

    pub fn price(&self) -> f64 {
        self.price
    }

    pub fn entries(&self) -> &[(DemandVector, u64)] {
        &self.entries
    }

    /// Number of recorded periods (sum of weights).
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

/// Scenario storage across prices; the key includes the price, so different
/// prices never merge.
#[derive(Debug, Clone, Default)]
pub struct ScenarioHistory {
    sets: Vec<ScenarioSet>,
}

impl ScenarioHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_scenario(&mut self, price: f64, demand: &DemandVector) {
        if let Some(set) = self
            .sets
            .iter_mut()
            .find(|s| s.price.to_bits() == price.to_bits())
        {
            set.record(demand);
        } else {
            let mut set = ScenarioSet::new(price);
            set.record(demand);
            self.sets.push(set);
        }
    }

    pub fn sets(&self) -> &[ScenarioSet] {
        &self.sets
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn unit_market() -> MarketParams {
        MarketParams {
            m: 1,
            n: 1,
            gamma: vec![0.3],
            c: vec![vec![0.0]],
            p_max: 1.0,
            i_max: 2.0,
            gamma_max: 1.0,
            a_max: 2.0,
            b_max: 1.0,
        }
    }

    fn noiseless() -> Noise {
        Noise::FiniteSupport {
            atoms: vec![NoiseAtom {
                offset: vec![0.0],
                prob: 1.0,
            }],
        }
    }

    #[test]
    fn deterministic_line() {
        let model = DemandModel {
            a: vec![2.0],
            b: vec![1.0],
            noise: noiseless(),
        };
        model.validate(&unit_market()).unwrap();
        let mut r = rng::run_rng(0);
        let d = sample_demand(&model, 1.0, &mut r);
        assert_eq!(d.values(), &[1.0]);
        let d0 = sample_demand(&model, 0.0, &mut r);
        assert_eq!(d0.values(), &[2.0]);
    }

    #[test]
    fn two_point_noise_matches_analytic_mean() {
        let model = DemandModel {
            a: vec![2.0],
            b: vec![1.0],
            noise: Noise::FiniteSupport {
                atoms: vec![
                    NoiseAtom { offset: vec![-0.5], prob: 0.5 },
                    NoiseAtom { offset: vec![0.5], prob: 0.5 },
                ],
            },
        };
        model.validate(&unit_market()).unwrap();
        let mut r = rng::run_rng(13);
        let draws = 100_000;
        let mut sum = 0.0;
        let mut lows = 0u64;
        for _ in 0..draws {
            let d = sample_demand(&model, 1.0, &mut r);
            let v = d.values()[0];
            assert!(v == 0.5 || v == 1.5, "unexpected draw {v}");
            if v == 0.5 {
                lows += 1;
            }
            sum += v;
        }
        let mean = sum / draws as f64;
        assert!((mean - 1.0).abs() <= 0.01, "mean {mean}");
        // 3σ multinomial band around p = 1/2.
        let sd = (0.25 / draws as f64).sqrt();
        let freq = lows as f64 / draws as f64;
        assert!((freq - 0.5).abs() <= 3.0 * sd, "freq {freq}");
    }

    #[test]
    fn infeasible_support_is_rejected() {
        let model = DemandModel {
            a: vec![1.0],
            b: vec![1.0],
            noise: Noise::FiniteSupport {
                atoms: vec![
                    NoiseAtom { offset: vec![-0.5], prob: 0.5 },
                    NoiseAtom { offset: vec![0.5], prob: 0.5 },
                ],
            },
        };
        // At p_max the mean is 0, so the -0.5 atom would go negative.
        assert!(model.validate(&unit_market()).is_err());
    }

    #[test]
    fn truncated_gaussian_is_recentred_and_feasible() {
        let model = DemandModel {
            a: vec![2.0],
            b: vec![1.0],
            noise: Noise::TruncatedGaussian {
                sigma: vec![0.2],
                lo: vec![-0.5],
                hi: vec![0.9],
            },
        };
        model.validate(&unit_market()).unwrap();
        let mut r = rng::run_rng(5);
        let draws = 200_000;
        let mean: f64 = (0..draws)
            .map(|_| sample_demand(&model, 1.0, &mut r).values()[0])
            .sum::<f64>()
            / draws as f64;
        // Corrected noise has mean zero, so demand averages a - b·p = 1.
        assert!((mean - 1.0).abs() < 5e-3, "mean {mean}");
    }

    #[test]
    fn realized_cost_hand_example() {
        let mkt = unit_market();
        let inv = Inventory::new(vec![1.0], mkt.i_max).unwrap();
        let d = DemandVector::new(vec![1.0]).unwrap();
        let q = realized_cost(&mkt, &inv, 1.0, &d);
        assert!((q - (0.3 - 1.0)).abs() < 1e-12);
        let empty = Inventory::new(vec![0.0], mkt.i_max).unwrap();
        assert_eq!(realized_cost(&mkt, &empty, 1.0, &d), 0.0);
    }

    #[test]
    fn realized_cost_stays_within_the_declared_bounds() {
        // -p_max·i_max ≤ Q_t ≤ gamma_max·i_max on any feasible decision.
        let mut r = rng::oracle_rng(17);
        for _ in 0..300 {
            let m = rand::Rng::gen_range(&mut r, 1..=3usize);
            let n = rand::Rng::gen_range(&mut r, 1..=3usize);
            let mkt = MarketParams {
                m,
                n,
                gamma: (0..m).map(|_| rand::Rng::gen_range(&mut r, 0.0..1.0)).collect(),
                c: (0..m)
                    .map(|_| (0..n).map(|_| rand::Rng::gen_range(&mut r, 0.0..2.0)).collect())
                    .collect(),
                p_max: 2.0,
                i_max: 3.0,
                gamma_max: 1.0,
                a_max: 3.0,
                b_max: 1.0,
            };
            let mut levels: Vec<f64> =
                (0..m).map(|_| rand::Rng::gen_range(&mut r, 0.0..1.0)).collect();
            let total: f64 = levels.iter().sum();
            if total > mkt.i_max {
                levels.iter_mut().for_each(|v| *v *= mkt.i_max / total);
            }
            let inv = Inventory::new(levels, mkt.i_max).unwrap();
            let d = DemandVector::new(
                (0..n).map(|_| rand::Rng::gen_range(&mut r, 0.0..2.0)).collect(),
            )
            .unwrap();
            let p = rand::Rng::gen_range(&mut r, 0.0..mkt.p_max);
            let q = realized_cost(&mkt, &inv, p, &d);
            assert!(q >= -mkt.p_max * mkt.i_max - 1e-9, "q = {q}");
            assert!(q <= mkt.gamma_max * mkt.i_max + 1e-9, "q = {q}");
        }
    }

    #[test]
    fn realized_cost_is_convex_in_inventory() {
        let mkt = MarketParams {
            m: 2,
            n: 2,
            gamma: vec![0.2, 0.4],
            c: vec![vec![0.1, 0.6], vec![0.5, 0.3]],
            p_max: 1.0,
            i_max: 5.0,
            gamma_max: 1.0,
            a_max: 2.0,
            b_max: 1.0,
        };
        let mut r = rng::oracle_rng(23);
        for _ in 0..100 {
            let sample = |r: &mut rand_chacha::ChaCha12Rng| -> Vec<f64> {
                (0..2).map(|_| rand::Rng::gen_range(r, 0.0..2.0)).collect()
            };
            let i1 = sample(&mut r);
            let i2 = sample(&mut r);
            let d = DemandVector::new(sample(&mut r)).unwrap();
            let p = rand::Rng::gen_range(&mut r, 0.0..1.0);
            let q = |lv: &[f64]| {
                realized_cost(&mkt, &Inventory::new(lv.to_vec(), mkt.i_max).unwrap(), p, &d)
            };
            let (qa, qb) = (q(&i1), q(&i2));
            for lambda in [0.25, 0.5, 0.75] {
                let mix: Vec<f64> = i1
                    .iter()
                    .zip(&i2)
                    .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                    .collect();
                let qm = q(&mix);
                assert!(
                    qm <= lambda * qa + (1.0 - lambda) * qb + 1e-9,
                    "not convex in inventory at lambda {lambda}"
                );
            }
        }
    }

    #[test]
    fn scenario_sets_merge_identical_draws() {
        let mut hist = ScenarioHistory::new();
        let d1 = DemandVector::new(vec![1.0, 2.0]).unwrap();
        let d2 = DemandVector::new(vec![1.0, 2.0]).unwrap();
        let d3 = DemandVector::new(vec![0.5, 2.0]).unwrap();
        hist.record_scenario(0.5, &d1);
        hist.record_scenario(0.5, &d2);
        hist.record_scenario(0.5, &d3);
        hist.record_scenario(0.75, &d1);
        assert_eq!(hist.sets().len(), 2);
        let at_half = &hist.sets()[0];
        assert_eq!(at_half.entries().len(), 2);
        assert_eq!(at_half.entries()[0].1, 2);
        assert_eq!(at_half.total(), 3);
    }

    #[test]
    fn finite_noise_entry_count_is_bounded_by_atom_count() {
        let model = DemandModel {
            a: vec![2.0],
            b: vec![1.0],
            noise: Noise::FiniteSupport {
                atoms: vec![
                    NoiseAtom { offset: vec![-0.5], prob: 0.5 },
                    NoiseAtom { offset: vec![0.5], prob: 0.5 },
                ],
            },
        };
        let mut r = rng::run_rng(3);
        let mut set = ScenarioSet::new(0.25);
        for _ in 0..1000 {
            set.record(&sample_demand(&model, 0.25, &mut r));
        }
        assert!(set.entries().len() <= 2);
        assert_eq!(set.total(), 1000);
    }
}
