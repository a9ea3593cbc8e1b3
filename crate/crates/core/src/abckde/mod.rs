//! Prior-weighted Gaussian kernel density over `(parameters, statistics)`,
//! conditioned on observed statistics.
//!
//! Simulations are scaled to the unit hypercube: parameters by their prior
//! bounds, statistics by their simulated range padded by `1 / (N + 1)` of
//! the range on each side. Each simulation carries mass `1 / prior density`
//! so that the conditioned estimate tracks the likelihood.

mod grid;
mod kde;

pub use grid::{
    conditional_grid, posterior_summaries, write_posterior_csv, DensityGrid, GridAxis, GridOptions,
    PosteriorSummary, SliceMode, DEFAULT_HDR_LEVEL, SUMMARY_RESOLUTION,
};
pub use kde::{
    bandwidths, scale_points, scale_points_with, scott_factor, weighted_density, KdeModel,
    Weighting, BANDWIDTH_FLOOR,
};

use crate::netgen::{ParameterSet, PriorSpec};
use crate::sumstats::StatVector;
use crate::{Error, Result};

/// One simulation: its parameter draw and statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub run_id: u64,
    pub params: ParameterSet,
    pub stats: Vec<Option<f64>>,
}

impl SimRun {
    pub fn stat_vector(&self, names: &[String]) -> StatVector {
        StatVector::new(names.to_vec(), self.stats.clone())
    }
}

/// Simulations of one round. Every run has one value per prior entry and
/// one (possibly missing) value per statistic name.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTable {
    pub prior: PriorSpec,
    pub stat_names: Vec<String>,
    pub runs: Vec<SimRun>,
}

impl SimTable {
    pub fn new(prior: PriorSpec, stat_names: Vec<String>) -> Self {
        Self {
            prior,
            stat_names,
            runs: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn stat_index(&self, name: &str) -> Option<usize> {
        self.stat_names.iter().position(|s| s == name)
    }

    /// Keeps only the named statistics, in the given order, and drops runs
    /// with any of them missing. Returns the reduced table and the number of
    /// runs dropped.
    pub fn select_statistics<S: AsRef<str>>(&self, names: &[S]) -> Result<(SimTable, usize)> {
        let idx = names
            .iter()
            .map(|n| {
                self.stat_index(n.as_ref())
                    .ok_or_else(|| Error::MissingStatistic(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let runs: Vec<SimRun> = self
            .runs
            .iter()
            .filter_map(|r| {
                let stats: Option<Vec<f64>> = idx.iter().map(|&i| r.stats[i]).collect();
                stats.map(|s| SimRun {
                    run_id: r.run_id,
                    params: r.params.clone(),
                    stats: s.into_iter().map(Some).collect(),
                })
            })
            .collect();
        let dropped = self.runs.len() - runs.len();
        Ok((
            SimTable {
                prior: self.prior.clone(),
                stat_names: names.iter().map(|n| n.as_ref().to_string()).collect(),
                runs,
            },
            dropped,
        ))
    }
}
