//! Randomness contract.
//!
//! Every experiment is driven by one master seed. Replication `r` runs on the
//! effective seed `master + r` (wrapping), so `steps_<s>.csv` is always
//! reproducible by a single run with `--seed s`. Streams for auxiliary
//! sampling (e.g. the Monte Carlo oracle) share the effective seed but use a
//! distinct ChaCha stream id, so they never consume draws from the run itself.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream id for the period-by-period demand draws of a run.
const STREAM_RUN: u64 = 0;
/// Stream id for oracle-side sampling (empirical atoms, Monte Carlo checks).
const STREAM_ORACLE: u64 = 1;

/// Effective seed for replication `rep` of a master seed.
pub fn replication_seed(master: u64, rep: u64) -> u64 {
    master.wrapping_add(rep)
}

/// The generator that drives one run's demand realizations.
pub fn run_rng(effective_seed: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(effective_seed);
    rng.set_stream(STREAM_RUN);
    rng
}

/// A generator for oracle-side sampling, independent of the run stream.
pub fn oracle_rng(effective_seed: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(effective_seed);
    rng.set_stream(STREAM_ORACLE);
    rng
}
