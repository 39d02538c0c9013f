//! Experiment configuration: ingestion, validation, and the shared
//! confidence-bound constants derived from it.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::DemandModel;
use crate::market::MarketParams;

#[derive(Debug, Error)]
#[error("invalid configuration:\n  {}", .0.join("\n  "))]
pub struct ConfigError(pub Vec<String>);

fn default_epsilon() -> f64 {
    0.05
}

fn default_replications() -> u64 {
    1
}

/// A fully described experiment. `demand` is the hidden ground truth the
/// environment simulates; the learner itself only ever sees `market`,
/// `horizon`, and `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub market: MarketParams,
    pub demand: DemandModel,
    /// Number of periods T.
    pub horizon: u64,
    /// Failure probability of the confidence machinery.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Master seed; replication r runs on seed + r.
    pub seed: u64,
    /// Optional override of the cost-curve Lipschitz constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_replications")]
    pub replications: u64,
}

impl ExperimentConfig {
    /// Every violated invariant across the whole config, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = self.market.violations();
        errs.extend(self.demand.violations(&self.market));
        let agents = (self.market.m * self.market.n + 1) as u64;
        let min_t = 3 * agents * 3;
        if self.horizon < min_t {
            errs.push(format!(
                "horizon {} is below the initialization minimum {min_t} (9 periods per interval agent)",
                self.horizon
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            errs.push(format!("epsilon must lie in (0,1), got {}", self.epsilon));
        }
        if let Some(lw) = self.l_w {
            if !(lw > 0.0) {
                errs.push(format!("l_w override must be positive, got {lw}"));
            }
        }
        if self.replications == 0 {
            errs.push("replications must be at least 1".into());
        }
        errs
    }

    pub fn validated(self) -> Result<Self, ConfigError> {
        let errs = self.violations();
        if errs.is_empty() {
            Ok(self)
        } else {
            Err(ConfigError(errs))
        }
    }
}

/// Parse and validate a raw JSON config, reporting every violation at once.
pub fn validate_config(raw: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig =
        serde_json::from_str(raw).map_err(|e| ConfigError(vec![format!("parse error: {e}")]))?;
    cfg.validated()
}

/// `log_{4/3}(x)`, the natural epoch-counting base of the bracket search.
pub fn log_four_thirds(x: f64) -> f64 {
    x.ln() / (4.0f64 / 3.0).ln()
}

/// Constants every interval agent shares for one experiment.
///
/// `delta_k` is the one-sample concentration scale; a sub-epoch of `n`
/// samples earns the error bar `delta_k / (2√n)`. `n0` is the complementary
/// sample count used when an agent reaches its exploitation price without a
/// finite error bar, and `c_check` the interval-width part of the epoch cap.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremConstants {
    pub epsilon: f64,
    pub delta_k: f64,
    pub n0: u64,
    pub c_check: f64,
    pub l_w: f64,
}

/// Compute the shared constants for a validated config.
///
/// The default Lipschitz bound for the optimistic cost curve is the
/// conservative envelope `i_max·(1 + p_max) + n·b_max·p_max`: the price
/// gradient of a one-period cost is at most the shipped quantity plus the
/// dual-price effect of the demand slope. Counts are rounded up.
pub fn theorem_constants(config: &ExperimentConfig) -> TheoremConstants {
    let mkt = &config.market;
    let mn = (mkt.m * mkt.n) as f64;
    let t = config.horizon as f64;
    let delta_k = (2.0 * (48.0 * (2.0 * mn + 1.0) * t / config.epsilon).ln()).sqrt()
        * mkt.p_max.max(mkt.gamma_max)
        * mkt.i_max;
    let c_check = log_four_thirds(mkt.p_max) + 1.0;
    let n0 = (6.0 * (log_four_thirds(t) + c_check)).ceil() as u64;
    let l_w = config
        .l_w
        .unwrap_or_else(|| mkt.i_max * (1.0 + mkt.p_max) + mkt.n as f64 * mkt.b_max * mkt.p_max);
    TheoremConstants {
        epsilon: config.epsilon,
        delta_k,
        n0,
        c_check,
        l_w,
    }
}

/// Shared fixtures for unit tests across the crate.
#[cfg(test)]
pub mod tests_support {
    use super::*;
    use crate::environment::{Noise, NoiseAtom};

    /// Noiseless 1×1 market with a single interior breakpoint at 0.5, so the
    /// run has exactly two interval agents.
    pub fn two_interval_config(horizon: u64) -> ExperimentConfig {
        ExperimentConfig {
            market: MarketParams {
                m: 1,
                n: 1,
                gamma: vec![0.1],
                c: vec![vec![0.5]],
                p_max: 1.0,
                i_max: 2.0,
                gamma_max: 1.0,
                a_max: 2.0,
                b_max: 1.0,
            },
            demand: DemandModel {
                a: vec![1.5],
                b: vec![1.0],
                noise: Noise::FiniteSupport {
                    atoms: vec![
                        NoiseAtom {
                            offset: vec![-0.25],
                            prob: 0.5,
                        },
                        NoiseAtom {
                            offset: vec![0.25],
                            prob: 0.5,
                        },
                    ],
                },
            },
            horizon,
            epsilon: 0.05,
            seed: 0,
            l_w: None,
            output: None,
            replications: 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{Noise, NoiseAtom};

    pub(crate) fn minimal_config() -> ExperimentConfig {
        ExperimentConfig {
            market: MarketParams {
                m: 1,
                n: 1,
                gamma: vec![0.0],
                c: vec![vec![0.0]],
                p_max: 1.0,
                i_max: 1.0,
                gamma_max: 1.0,
                a_max: 1.0,
                b_max: 1.0,
            },
            demand: DemandModel {
                a: vec![1.0],
                b: vec![1.0],
                noise: Noise::FiniteSupport {
                    atoms: vec![NoiseAtom {
                        offset: vec![0.0],
                        prob: 1.0,
                    }],
                },
            },
            horizon: 100,
            epsilon: 0.05,
            seed: 0,
            l_w: None,
            output: None,
            replications: 1,
        }
    }

    #[test]
    fn minimal_legal_instance_validates() {
        assert!(minimal_config().validated().is_ok());
    }

    #[test]
    fn validation_reports_field_paths() {
        let mut cfg = minimal_config();
        cfg.market.c[0][0] = 2.0;
        cfg.market.i_max = 0.5;
        let err = cfg.validated().unwrap_err();
        assert!(err.0.iter().any(|e| e.contains("c[0][0] exceeds p_max")));
        assert!(err.0.iter().any(|e| e.contains("i_max < 1")));
    }

    #[test]
    fn horizon_must_cover_the_initialization_probes() {
        let mut cfg = minimal_config();
        cfg.horizon = 17; // two agents need 3·2·3 = 18
        let err = cfg.validated().unwrap_err();
        assert!(err.0.iter().any(|e| e.contains("initialization minimum")));
    }

    #[test]
    fn round_trip_is_idempotent() {
        let cfg = minimal_config().validated().unwrap();
        let raw = serde_json::to_string(&cfg).unwrap();
        let again = validate_config(&raw).unwrap();
        assert_eq!(cfg, again);
        let raw2 = serde_json::to_string(&again).unwrap();
        assert_eq!(raw, raw2);
    }

    #[test]
    fn unit_price_cap_gives_unit_c_check() {
        let consts = theorem_constants(&minimal_config());
        assert!((consts.c_check - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_horizon_sample_count() {
        // log_{4/3}(4/3) = 1, so with c_check = 1 the count is 6·(1+1) = 12.
        let n0 = (6.0 * (log_four_thirds(4.0 / 3.0) + 1.0)).ceil() as u64;
        assert_eq!(n0, 12);
    }

    #[test]
    fn delta_matches_direct_arithmetic() {
        let mut cfg = minimal_config();
        cfg.horizon = 100;
        let consts = theorem_constants(&cfg);
        // Direct evaluation: m = n = 1 gives 2mn + 1 = 3 inside the log.
        let expect = (2.0 * (48.0 * 3.0 * 100.0 / 0.05f64).ln()).sqrt();
        assert!((consts.delta_k - expect).abs() < 1e-12);
    }

    #[test]
    fn delta_is_monotone_in_horizon_and_confidence() {
        let mut prev_t = 0.0;
        for t in [20u64, 50, 100, 1000, 10_000, 100_000] {
            let mut cfg = minimal_config();
            cfg.horizon = t;
            let d = theorem_constants(&cfg).delta_k;
            assert!(d >= prev_t);
            prev_t = d;
        }
        let mut prev_e = 0.0;
        for eps in [0.5, 0.2, 0.1, 0.05, 0.01, 0.001] {
            let mut cfg = minimal_config();
            cfg.epsilon = eps;
            let d = theorem_constants(&cfg).delta_k;
            assert!(d >= prev_e);
            prev_e = d;
        }
    }

    #[test]
    fn default_lipschitz_bound_and_override() {
        let cfg = minimal_config();
        let c = theorem_constants(&cfg);
        assert!((c.l_w - (1.0 * 2.0 + 1.0 * 1.0 * 1.0)).abs() < 1e-12);
        let mut cfg2 = cfg;
        cfg2.l_w = Some(7.5);
        assert_eq!(theorem_constants(&cfg2).l_w, 7.5);
    }
}
