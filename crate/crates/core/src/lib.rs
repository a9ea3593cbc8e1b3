//! Approximate Bayesian computation for networked populations observed
//! through link-traced samples.
//!
//! The crate is organised by stage:
//!
//! * [`netgen`] draws parameter sets from a joint prior and grows spatial
//!   populations with distance-decay attachment and an infection mechanic.
//! * [`linktrace`] takes a fixed-size breadth-first (or delayed) recruitment
//!   sample and records per-node bookkeeping.
//! * [`sumstats`] turns a sample into sampling-order statistics and screens
//!   statistics against parameters with cubic regressions.
//! * [`abckde`] builds the prior-weighted Gaussian kernel density over
//!   `(parameters, statistics)` and conditions it on observed statistics.
//! * [`citesim`] is the competitive-attractiveness citation model.
//! * [`pipeline`] wires everything into reproducible simulation rounds.

pub mod abckde;
pub mod citesim;
pub mod error;
pub mod linktrace;
pub mod netgen;
pub mod pipeline;
pub mod sumstats;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Per-run stream: `master_seed + run_index` (wrapping), expanded by
/// `SeedableRng::seed_from_u64`.
pub fn run_rng(master_seed: u64, run_index: u64) -> SimRng {
    SimRng::seed_from_u64(master_seed.wrapping_add(run_index))
}
