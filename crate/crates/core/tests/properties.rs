//! Randomized structural properties of the allocation value and the
//! persistence layer.

use proptest::prelude::*;

use pla_core::environment::{sample_demand, DemandModel, Noise, NoiseAtom};
use pla_core::market::{DemandVector, Inventory, MarketParams};
use pla_core::rng::run_rng;
use pla_core::steplog::{steps_from_csv, steps_to_csv, StepLog};
use pla_core::transport::solve_allocation;

fn market_2x2(c: [[f64; 2]; 2]) -> MarketParams {
    MarketParams {
        m: 2,
        n: 2,
        gamma: vec![0.0, 0.0],
        c: vec![c[0].to_vec(), c[1].to_vec()],
        p_max: 2.0,
        i_max: 100.0,
        gamma_max: 1.0,
        a_max: 10.0,
        b_max: 1.0,
    }
}

fn value(market: &MarketParams, i: &[f64], d: &[f64], p: f64) -> f64 {
    solve_allocation(
        &Inventory::new(i.to_vec(), market.i_max).unwrap(),
        &DemandVector::new(d.to_vec()).unwrap(),
        p,
        market,
    )
    .objective
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// Growing any capacity can only enlarge the feasible set, so the optimal
    /// value never increases.
    #[test]
    fn allocation_value_is_monotone_in_capacities(
        c in proptest::array::uniform4(0.0f64..2.0),
        i in proptest::array::uniform2(0.0f64..2.0),
        d in proptest::array::uniform2(0.0f64..2.0),
        bump in 0.01f64..1.0,
        which in 0usize..4,
        p in 0.0f64..2.0,
    ) {
        let market = market_2x2([[c[0], c[1]], [c[2], c[3]]]);
        let base = value(&market, &i, &d, p);
        let mut i2 = i.to_vec();
        let mut d2 = d.to_vec();
        if which < 2 { i2[which] += bump; } else { d2[which - 2] += bump; }
        let grown = value(&market, &i2, &d2, p);
        prop_assert!(grown <= base + 1e-9, "value rose from {base} to {grown}");
    }

    /// Scaling both capacity families scales the value linearly.
    #[test]
    fn allocation_value_is_positively_homogeneous(
        c in proptest::array::uniform4(0.0f64..2.0),
        i in proptest::array::uniform2(0.0f64..2.0),
        d in proptest::array::uniform2(0.0f64..2.0),
        alpha in 0.0f64..3.0,
        p in 0.0f64..2.0,
    ) {
        let market = market_2x2([[c[0], c[1]], [c[2], c[3]]]);
        let base = value(&market, &i, &d, p);
        let i2: Vec<f64> = i.iter().map(|v| alpha * v).collect();
        let d2: Vec<f64> = d.iter().map(|v| alpha * v).collect();
        let scaled = value(&market, &i2, &d2, p);
        prop_assert!(
            (scaled - alpha * base).abs() <= 1e-9 * (1.0 + alpha * base.abs()),
            "g(alpha z) = {scaled} vs alpha g(z) = {}", alpha * base
        );
    }

    /// The log serializer round-trips arbitrary finite rows bit for bit.
    #[test]
    fn step_log_round_trip(
        t in 1u64..1_000_000,
        price in proptest::num::f64::NORMAL,
        inv in proptest::collection::vec(proptest::num::f64::NORMAL, 1..4),
        dem in proptest::collection::vec(proptest::num::f64::NORMAL, 1..4),
        cost in proptest::num::f64::NORMAL,
        lcb in proptest::collection::vec(proptest::num::f64::NORMAL, 1..6),
    ) {
        let row = StepLog {
            t,
            k_hat: (t % 7) as usize,
            stage: (t % 4) as u8,
            price,
            inventory: inv.clone(),
            demand: dem.clone(),
            allocation: vec![0.25; inv.len() * dem.len()],
            realized_cost: cost,
            oracle_cost: cost * 0.5,
            inst_regret: cost.abs(),
            lcb,
        };
        let text = steps_to_csv(std::slice::from_ref(&row));
        let back = steps_from_csv(&text).unwrap();
        prop_assert_eq!(back, vec![row]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    /// Sampled demand is nonnegative at every price whenever the model passes
    /// the support-feasibility validation.
    #[test]
    fn sampled_demand_respects_the_support(
        a in 1.0f64..1.5,
        b in 0.2f64..1.0,
        amp in 0.0f64..0.4,
        price_frac in 0.0f64..1.0,
        seed in 0u64..1000,
    ) {
        let market = MarketParams {
            m: 1,
            n: 1,
            gamma: vec![0.1],
            c: vec![vec![0.0]],
            p_max: 1.0,
            i_max: 1.0,
            gamma_max: 1.0,
            a_max: 2.0,
            b_max: 1.0,
        };
        let model = DemandModel {
            a: vec![a],
            b: vec![b],
            noise: Noise::FiniteSupport {
                atoms: vec![
                    NoiseAtom { offset: vec![-amp], prob: 0.5 },
                    NoiseAtom { offset: vec![amp], prob: 0.5 },
                ],
            },
        };
        prop_assume!(model.violations(&market).is_empty());
        let mut rng = run_rng(seed);
        for _ in 0..32 {
            let d = sample_demand(&model, price_frac * market.p_max, &mut rng);
            prop_assert!(d.values()[0] >= 0.0);
        }
    }
}
