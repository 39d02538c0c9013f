//! Known market structure: supplier/consumer counts, unit costs, and the
//! boundedness constants the learner is told up front.
//!
//! Everything here is immutable after validation and is shared by value
//! across the whole run. The unknown demand side lives in [`crate::environment`].

use serde::{Deserialize, Serialize};

/// The parameters the seller knows before the first period.
///
/// `gamma[i]` is the per-unit inventory cost of supplier `i`; `c[i][j]` the
/// per-unit cost of shipping from supplier `i` to consumer `j`. The `*_max`
/// fields are the declared bounds (all at least one, so the confidence radii
/// below are never degenerate); the actual demand parameters may sit well
/// inside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams {
    pub m: usize,
    pub n: usize,
    pub gamma: Vec<f64>,
    pub c: Vec<Vec<f64>>,
    pub p_max: f64,
    pub i_max: f64,
    pub gamma_max: f64,
    pub a_max: f64,
    pub b_max: f64,
}

impl MarketParams {
    /// Every violated invariant, one message per violation. Empty means valid.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.m == 0 {
            errs.push("m must be a positive integer".to_string());
        }
        if self.n == 0 {
            errs.push("n must be a positive integer".to_string());
        }
        for (name, v) in [
            ("gamma_max", self.gamma_max),
            ("a_max", self.a_max),
            ("b_max", self.b_max),
            ("i_max", self.i_max),
            ("p_max", self.p_max),
        ] {
            if !(v >= 1.0) {
                errs.push(format!("{name} < 1 violates the bound normalization ({v})"));
            }
        }
        if self.gamma.len() != self.m {
            errs.push(format!(
                "gamma has length {} but m = {}",
                self.gamma.len(),
                self.m
            ));
        }
        for (i, &g) in self.gamma.iter().enumerate() {
            if !(g >= 0.0) {
                errs.push(format!("gamma[{i}] is negative ({g})"));
            } else if g > self.gamma_max {
                errs.push(format!("gamma[{i}] exceeds gamma_max ({g} > {})", self.gamma_max));
            }
        }
        if self.c.len() != self.m {
            errs.push(format!("c has {} rows but m = {}", self.c.len(), self.m));
        }
        for (i, row) in self.c.iter().enumerate() {
            if row.len() != self.n {
                errs.push(format!("c[{i}] has length {} but n = {}", row.len(), self.n));
                continue;
            }
            for (j, &cij) in row.iter().enumerate() {
                if !(cij >= 0.0) {
                    errs.push(format!("c[{i}][{j}] is negative ({cij})"));
                } else if cij > self.p_max {
                    // The interval construction treats the sorted costs plus the
                    // sentinels 0 and p_max as a partition of [0, p_max].
                    errs.push(format!("c[{i}][{j}] exceeds p_max ({cij} > {})", self.p_max));
                }
            }
        }
        errs
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }
}

/// Nonnegative inventory levels with `‖I‖₁ ≤ i_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inventory(Vec<f64>);

impl Inventory {
    pub fn new(levels: Vec<f64>, i_max: f64) -> Result<Self, String> {
        if let Some((i, &v)) = levels.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(format!("inventory[{i}] is negative ({v})"));
        }
        let total: f64 = levels.iter().sum();
        // Small slack: SAA optima sit numerically on the budget face.
        if total > i_max * (1.0 + 1e-12) + 1e-12 {
            return Err(format!("total inventory {total} exceeds i_max {i_max}"));
        }
        Ok(Inventory(levels))
    }

    /// The all-ones probe inventory used before anything has been learned.
    pub fn ones(m: usize) -> Self {
        Inventory(vec![1.0; m])
    }

    pub(crate) fn from_raw(levels: Vec<f64>) -> Self {
        Inventory(levels)
    }

    pub fn levels(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Nonnegative realized demand per consumer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandVector(Vec<f64>);

impl DemandVector {
    pub fn new(demand: Vec<f64>) -> Result<Self, String> {
        if let Some((j, &v)) = demand.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(format!("demand[{j}] is negative ({v})"));
        }
        Ok(DemandVector(demand))
    }

    pub(crate) fn from_raw(demand: Vec<f64>) -> Self {
        DemandVector(demand)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn unit_market() -> MarketParams {
        MarketParams {
            m: 1,
            n: 1,
            gamma: vec![0.0],
            c: vec![vec![0.0]],
            p_max: 1.0,
            i_max: 1.0,
            gamma_max: 1.0,
            a_max: 1.0,
            b_max: 1.0,
        }
    }

    #[test]
    fn minimal_instance_is_valid() {
        assert!(unit_market().violations().is_empty());
    }

    #[test]
    fn cost_above_price_cap_is_reported() {
        let mut mkt = unit_market();
        mkt.c[0][0] = 2.0;
        let errs = mkt.violations();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].contains("c[0][0] exceeds p_max"), "{errs:?}");
    }

    #[test]
    fn sub_unit_bound_is_reported() {
        let mut mkt = unit_market();
        mkt.i_max = 0.5;
        let errs = mkt.violations();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].contains("i_max < 1"), "{errs:?}");
    }

    #[test]
    fn all_violations_are_collected() {
        let mkt = MarketParams {
            m: 1,
            n: 1,
            gamma: vec![-1.0],
            c: vec![vec![3.0]],
            p_max: 2.0,
            i_max: 0.5,
            gamma_max: 1.0,
            a_max: 1.0,
            b_max: 1.0,
        };
        let errs = mkt.violations();
        assert!(errs.len() >= 3, "expected several violations, got {errs:?}");
    }

    #[test]
    fn inventory_budget_is_enforced() {
        assert!(Inventory::new(vec![0.6, 0.6], 1.0).is_err());
        assert!(Inventory::new(vec![0.4, 0.6], 1.0).is_ok());
        assert!(Inventory::new(vec![-0.1], 1.0).is_err());
        assert!(DemandVector::new(vec![0.0, 1.0]).is_ok());
        assert!(DemandVector::new(vec![-0.2]).is_err());
    }
}
