//! Sampling-order summary statistics of a link-traced sample, the
//! regressions behind them, and cubic screening of statistics against
//! parameters.

mod io;
pub mod regression;
mod screen;

pub(crate) use screen::paired_columns;

pub use io::{read_stats_csv, write_stats_csv, ColumnSplit};
pub use regression::{log_odds_slope, ols_slope, weighted_slope};
pub use screen::{cubic_screen, CubicModel, ScreenEntry, ScreeningReport, MIN_SCREEN_RUNS};

use crate::linktrace::{NodeRow, SampleRecord};

pub const MEAN_DEGREE_RECRUITED: &str = "mean_degree_recruited";
pub const MEAN_DEGREE_REPORTED: &str = "mean_degree_reported";
pub const MEAN_DEGREE_INFECTED: &str = "mean_degree_infected";
pub const DEGREE_DIFF_INFECTED: &str = "degree_diff_infected";
pub const INFECTION_PROP: &str = "infection_prop";
pub const D_DEGREE: &str = "d_degree";
pub const D_DEPTH: &str = "d_depth";
pub const D_USED: &str = "d_used";
pub const D_INFECT: &str = "d_infect";

/// The nine sample statistics, in output order.
pub const STAT_NAMES: [&str; 9] = [
    MEAN_DEGREE_RECRUITED,
    MEAN_DEGREE_REPORTED,
    MEAN_DEGREE_INFECTED,
    DEGREE_DIFF_INFECTED,
    INFECTION_PROP,
    D_DEGREE,
    D_DEPTH,
    D_USED,
    D_INFECT,
];

/// Named statistic values; `None` marks a statistic that is undefined for
/// the sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StatVector {
    pub names: Vec<String>,
    pub values: Vec<Option<f64>>,
}

impl StatVector {
    pub fn new(names: Vec<String>, values: Vec<Option<f64>>) -> Self {
        assert_eq!(names.len(), values.len());
        Self { names, values }
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        let (names, values) = pairs
            .into_iter()
            .map(|(n, v)| (n.to_string(), Some(v)))
            .unzip();
        Self { names, values }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .and_then(|i| self.values[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

/// Share of a node's available links that led to recruitment. A recruited
/// node's inbound edge is excluded from the denominator.
pub fn pr_link_used(row: &NodeRow) -> Option<f64> {
    let denom = if row.is_leap() {
        row.pop_degree
    } else {
        row.pop_degree.checked_sub(1)?
    };
    if denom == 0 {
        return None;
    }
    Some(row.links_recruited as f64 / denom as f64)
}

/// Normalised sampling order: 0 for the first node, 1 for the last.
pub fn sampling_time(order: usize, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        order as f64 / (n - 1) as f64
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Computes the nine statistics of [`STAT_NAMES`]. Depths must already be
/// filled (see [`crate::linktrace::node_depth`]).
///
/// `mean_degree_recruited` is the mean degree of the recruitment forest,
/// `2 * (rows - leaps) / rows`. The three degree means use population
/// degree. The slopes regress on normalised sampling order.
pub fn compute_stats(record: &SampleRecord) -> StatVector {
    let rows = &record.rows;
    let n = rows.len();
    let t = |r: &NodeRow| sampling_time(r.order, n);
    let degree = |r: &NodeRow| r.pop_degree as f64;

    let forest_degree = (n > 0).then(|| 2.0 * (n - record.n_leaps()) as f64 / n as f64);
    let reported = mean(rows.iter().map(degree));
    let infected = mean(rows.iter().filter(|r| r.infected).map(degree));
    let uninfected = mean(rows.iter().filter(|r| !r.infected).map(degree));
    let diff = infected.zip(uninfected).map(|(a, b)| a - b);
    let prop = mean(rows.iter().map(|r| f64::from(u8::from(r.infected))));

    let d_degree = ols_slope(&rows.iter().map(|r| (t(r), degree(r))).collect::<Vec<_>>());
    let d_depth = ols_slope(
        &rows
            .iter()
            .filter_map(|r| r.depth.map(|d| (t(r), d)))
            .collect::<Vec<_>>(),
    );
    let (used, weights): (Vec<(f64, f64)>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| pr_link_used(r).map(|u| ((t(r), u), degree(r))))
        .unzip();
    let d_used = weighted_slope(&used, &weights);
    let d_infect = log_odds_slope(
        &rows
            .iter()
            .map(|r| (t(r), u64::from(r.infected), 1))
            .collect::<Vec<_>>(),
    );

    StatVector {
        names: STAT_NAMES.iter().map(|s| s.to_string()).collect(),
        values: vec![
            forest_degree,
            reported,
            infected,
            diff,
            prop,
            d_degree,
            d_depth,
            d_used,
            d_infect,
        ],
    }
}

/// Centred moving average of `points` (`(x, y)` pairs) at each centre,
/// over `|x - centre| <= window / 2`. `None` where the window is empty.
pub fn moving_average(points: &[(f64, f64)], centers: &[f64], window: f64) -> Vec<Option<f64>> {
    let half = window / 2.0;
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    centers
        .iter()
        .map(|&c| {
            let lo = sorted.partition_point(|p| p.0 < c - half);
            let hi = sorted.partition_point(|p| p.0 <= c + half);
            mean(sorted[lo..hi].iter().map(|p| p.1))
        })
        .collect()
}
