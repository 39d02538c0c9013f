//! Online joint pricing and inventory allocation over a two-stage market.
//!
//! A seller stocks `m` suppliers, posts one price to `n` consumers, watches
//! price-dependent stochastic demand realize, and then ships inventory to
//! demand through a transportation problem with heterogeneous supply costs.
//! The expected one-period cost is only piecewise convex in the price, with
//! one convex piece per sorted supply cost, so the learner runs one
//! trisection-search agent per piece and lets a lower-confidence-bound
//! meta-strategy decide which agent spends the next periods.
//!
//! Module map:
//!
//! - [`market`] / [`config`]: domain types, validation, and the confidence
//!   constants every learner shares.
//! - [`simplex`]: the dense LP kernel behind both solvers.
//! - [`transport`]: the second-stage allocation solve with dual certificates,
//!   plus an exhaustive vertex-enumeration oracle for testing.
//! - [`environment`]: ground-truth demand sampling and realized costs.
//! - [`saa`]: scenario-weighted inventory optimization and the exact cost
//!   oracles used for evaluation.
//! - [`agents`] / [`meta`]: the three-stage interval learners and the LCB
//!   loop that schedules them.
//! - [`steplog`] / [`regret`] / [`baseline`]: persistence, regret accounting,
//!   slope fitting, and a fixed-grid comparator.

pub mod agents;
pub mod baseline;
pub mod checks;
pub mod config;
pub mod environment;
pub mod market;
pub mod meta;
pub mod regret;
pub mod rng;
pub mod saa;
pub mod simplex;
pub mod steplog;
pub mod transport;
