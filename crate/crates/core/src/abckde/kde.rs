use super::SimTable;
use crate::{Error, Result};

/// Smallest bandwidth in scaled units.
pub const BANDWIDTH_FLOOR: f64 = 1e-4;

/// Mass assigned to each simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// `1 / prior density` of the run's parameters.
    #[default]
    PriorInverse,
    /// Unit mass for every run.
    Uniform,
}

/// Scaled simulation points with per-dimension bandwidths and run masses.
/// Dimensions are the parameters in prior order followed by the statistics.
#[derive(Debug, Clone)]
pub struct KdeModel {
    pub(crate) param_names: Vec<String>,
    pub(crate) stat_names: Vec<String>,
    pub(crate) param_bounds: Vec<(f64, f64)>,
    pub(crate) stat_bounds: Vec<(f64, f64)>,
    /// Row-major `n_runs x dims`.
    pub(crate) points: Vec<f64>,
    pub(crate) bandwidths: Vec<f64>,
    pub(crate) log_weights: Vec<f64>,
    pub(crate) run_ids: Vec<u64>,
}

impl KdeModel {
    pub fn n_runs(&self) -> usize {
        self.run_ids.len()
    }

    pub fn dims(&self) -> usize {
        self.param_names.len() + self.stat_names.len()
    }

    pub fn n_params(&self) -> usize {
        self.param_names.len()
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn stat_names(&self) -> &[String] {
        &self.stat_names
    }

    pub fn param_bounds(&self) -> &[(f64, f64)] {
        &self.param_bounds
    }

    pub fn stat_bounds(&self) -> &[(f64, f64)] {
        &self.stat_bounds
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn run_ids(&self) -> &[u64] {
        &self.run_ids
    }

    /// Scaled coordinates of run `i`.
    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dims();
        &self.points[i * d..(i + 1) * d]
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|n| n == name)
    }

    pub fn scale_param(&self, j: usize, v: f64) -> f64 {
        affine(v, self.param_bounds[j])
    }

    pub fn unscale_param(&self, j: usize, u: f64) -> f64 {
        let (lo, hi) = self.param_bounds[j];
        lo + u * (hi - lo)
    }

    pub fn scale_stat(&self, j: usize, v: f64) -> f64 {
        affine(v, self.stat_bounds[j])
    }

    /// Replaces the bandwidths, for example to shrink them in limit checks.
    pub fn set_bandwidths(&mut self, bandwidths: Vec<f64>) {
        assert_eq!(bandwidths.len(), self.dims());
        assert!(bandwidths.iter().all(|&s| s > 0.0));
        self.bandwidths = bandwidths;
    }
}

fn affine(v: f64, (lo, hi): (f64, f64)) -> f64 {
    (v - lo) / (hi - lo)
}

/// [`scale_points_with`] under prior-inverse weighting.
pub fn scale_points(table: &SimTable) -> Result<KdeModel> {
    scale_points_with(table, Weighting::PriorInverse)
}

/// Scales every run of `table` to the unit hypercube and fits bandwidths.
/// Runs with a missing statistic are not allowed here; reduce the table with
/// [`SimTable::select_statistics`] first.
pub fn scale_points_with(table: &SimTable, weighting: Weighting) -> Result<KdeModel> {
    let n = table.runs.len();
    if n < 2 {
        return Err(Error::TooFewRuns(format!(
            "{n} complete runs, need at least 2"
        )));
    }
    let ns = table.stat_names.len();
    let mut stat_bounds = Vec::with_capacity(ns);
    for (j, name) in table.stat_names.iter().enumerate() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in &table.runs {
            let v = r.stats[j].ok_or_else(|| Error::MissingStatistic(name.clone()))?;
            if !v.is_finite() {
                return Err(Error::MissingStatistic(name.clone()));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let range = hi - lo;
        if range.is_nan() || range <= 0.0 {
            return Err(Error::ConstantStatistic(name.clone()));
        }
        let pad = range / (n as f64 + 1.0);
        stat_bounds.push((lo - pad, hi + pad));
    }

    let param_bounds: Vec<(f64, f64)> = table.prior.entries().iter().map(|e| e.bounds).collect();
    let np = param_bounds.len();
    let d = np + ns;
    let mut points = Vec::with_capacity(n * d);
    let mut log_weights = Vec::with_capacity(n);
    for r in &table.runs {
        points.extend(
            r.params
                .values
                .iter()
                .zip(&param_bounds)
                .map(|(&v, &b)| affine(v, b)),
        );
        points.extend(
            r.stats
                .iter()
                .zip(&stat_bounds)
                .map(|(v, &b)| affine(v.unwrap(), b)),
        );
        log_weights.push(match weighting {
            Weighting::PriorInverse => {
                let lw = -r.params.prior_density.ln();
                if !lw.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "run {} has prior density {}",
                        r.run_id, r.params.prior_density
                    )));
                }
                lw
            }
            Weighting::Uniform => 0.0,
        });
    }
    let bandwidths = bandwidths(&points, n, d);
    Ok(KdeModel {
        param_names: table.prior.names().map(str::to_string).collect(),
        stat_names: table.stat_names.clone(),
        param_bounds,
        stat_bounds,
        points,
        bandwidths,
        log_weights,
        run_ids: table.runs.iter().map(|r| r.run_id).collect(),
    })
}

/// `n^(-1 / (d + 4))`.
pub fn scott_factor(n: usize, d: usize) -> f64 {
    (n as f64).powf(-1.0 / (d as f64 + 4.0))
}

/// Per-dimension bandwidths for row-major `n x d` scaled points:
/// `scott_factor(n, d)` times the sample standard deviation, floored at
/// [`BANDWIDTH_FLOOR`].
pub fn bandwidths(points: &[f64], n: usize, d: usize) -> Vec<f64> {
    assert_eq!(points.len(), n * d);
    if n < 2 {
        return vec![BANDWIDTH_FLOOR; d];
    }
    let factor = scott_factor(n, d);
    (0..d)
        .map(|j| {
            let col = (0..n).map(|i| points[i * d + j]);
            let mean = col.clone().sum::<f64>() / n as f64;
            let var = col.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (factor * var.sqrt()).max(BANDWIDTH_FLOOR)
        })
        .collect()
}

pub(crate) fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `ln((2 pi)^(-d/2) prod sigma_j^-1)`.
pub(crate) fn log_kernel_norm(bandwidths: &[f64]) -> f64 {
    -0.5 * bandwidths.len() as f64 * (2.0 * std::f64::consts::PI).ln()
        - bandwidths.iter().map(|s| s.ln()).sum::<f64>()
}

/// Kernel estimate at `query`, a point in scaled coordinates (parameters
/// then statistics):
///
/// `H(q) = (2 pi)^(-d/2) prod_j sigma_j^-1 sum_i w_i exp(-1/2 sum_j ((q_j - x_ij) / sigma_j)^2)`.
pub fn weighted_density(model: &KdeModel, query: &[f64]) -> f64 {
    let d = model.dims();
    assert_eq!(query.len(), d);
    let terms = (0..model.n_runs()).map(|i| {
        let p = model.point(i);
        let q: f64 = (0..d)
            .map(|j| ((query[j] - p[j]) / model.bandwidths[j]).powi(2))
            .sum();
        model.log_weights[i] - 0.5 * q
    });
    (log_kernel_norm(&model.bandwidths) + log_sum_exp(terms)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abckde::SimRun;
    use crate::netgen::{Distribution, PriorEntry, PriorSpec};

    fn table(stats: &[f64]) -> SimTable {
        let prior = PriorSpec::new(vec![PriorEntry::new(
            "p",
            Distribution::Uniform { lo: 2.0, hi: 4.0 },
        )])
        .unwrap();
        let runs = stats
            .iter()
            .enumerate()
            .map(|(i, &s)| SimRun {
                run_id: i as u64,
                params: prior
                    .parameter_set(vec![2.0 + 2.0 * i as f64 / (stats.len().max(2) - 1) as f64])
                    .unwrap(),
                stats: vec![Some(s)],
            })
            .collect();
        SimTable {
            prior,
            stat_names: vec!["s".into()],
            runs,
        }
    }

    #[test]
    fn parameter_endpoints() {
        let m = scale_points(&table(&[0.0, 1.0, 0.5])).unwrap();
        assert_eq!(m.point(0)[0], 0.0);
        assert_eq!(m.point(2)[0], 1.0);
    }

    #[test]
    fn statistic_padding() {
        let m = scale_points(&table(&[0.0, 1.0, 0.5])).unwrap();
        assert_eq!(m.stat_bounds()[0], (-0.25, 1.25));
        assert!((m.point(0)[1] - 1.0 / 6.0).abs() < 1e-15);
        assert!((m.point(1)[1] - 5.0 / 6.0).abs() < 1e-15);
        // With two runs the padding is a third of the range.
        let m = scale_points(&table(&[0.0, 1.0])).unwrap();
        assert!((m.point(0)[1] - 0.2).abs() < 1e-15);
        assert!((m.point(1)[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn constant_statistic_fails() {
        assert!(matches!(
            scale_points(&table(&[3.0, 3.0])),
            Err(Error::ConstantStatistic(_))
        ));
        assert!(matches!(
            scale_points(&table(&[3.0])),
            Err(Error::TooFewRuns(_))
        ));
    }

    #[test]
    fn bandwidth_floor() {
        assert_eq!(bandwidths(&[0.3, 0.3, 0.3], 3, 1), vec![BANDWIDTH_FLOOR]);
        assert_eq!(bandwidths(&[0.3, 0.7], 1, 2), vec![BANDWIDTH_FLOOR; 2]);
    }

    #[test]
    fn kernel_peak() {
        let mut m = scale_points(&table(&[0.0, 1.0])).unwrap();
        m.log_weights = vec![0.0, f64::NEG_INFINITY];
        let q = m.point(0).to_vec();
        let s = &m.bandwidths;
        let peak = 1.0 / (2.0 * std::f64::consts::PI) / (s[0] * s[1]);
        assert!((weighted_density(&m, &q) / peak - 1.0).abs() < 1e-12);
    }
}
