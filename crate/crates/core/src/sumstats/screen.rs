use std::io::Write;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::regression::LinearFit;
use crate::abckde::SimTable;
use crate::Result;

/// Fewest complete (statistic, parameter) pairs a cubic screen accepts.
pub const MIN_SCREEN_RUNS: usize = 5;

/// Cubic regression `y ~ 1 + x + x^2 + x^3`, fitted on the standardised
/// statistic so that large raw values stay well conditioned. The model space
/// is invariant under the affine change, so fit quality is unaffected.
#[derive(Debug, Clone)]
pub struct CubicModel {
    center: f64,
    scale: f64,
    fit: LinearFit,
}

impl CubicModel {
    /// `None` with fewer than [`MIN_SCREEN_RUNS`] points or constant `x`.
    pub fn fit(xs: &[f64], ys: &[f64]) -> Option<Self> {
        assert_eq!(xs.len(), ys.len());
        let n = xs.len();
        if n < MIN_SCREEN_RUNS {
            return None;
        }
        let center = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - center).powi(2)).sum::<f64>() / n as f64;
        let scale = var.sqrt();
        if scale.is_nan() || scale <= 0.0 || xs.iter().all(|&x| x == xs[0]) {
            return None;
        }
        let design = DMatrix::from_fn(n, 4, |i, j| ((xs[i] - center) / scale).powi(j as i32));
        let fit = LinearFit::fit(&design, &DVector::from_column_slice(ys))?;
        Some(Self { center, scale, fit })
    }

    fn basis(&self, x: f64) -> DVector<f64> {
        let u = (x - self.center) / self.scale;
        DVector::from_fn(4, |j, _| u.powi(j as i32))
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.basis(x).dot(&self.fit.coefficients)
    }

    pub fn r_squared(&self) -> Option<f64> {
        self.fit.r_squared()
    }

    pub fn n(&self) -> usize {
        self.fit.n
    }

    /// F statistic of the cubic against the intercept-only model on 3 and
    /// `n - 4` degrees of freedom.
    pub fn f_statistic(&self) -> Option<f64> {
        let fit = &self.fit;
        if fit.tss <= 0.0 {
            return None;
        }
        let explained = (fit.tss - fit.rss).max(0.0) / 3.0;
        let resid = fit.rss / (fit.n - 4) as f64;
        if resid <= 0.0 {
            return Some(f64::INFINITY);
        }
        Some(explained / resid)
    }

    /// Prediction interval for a new response at `x` with coverage `level`.
    pub fn prediction_interval(&self, x: f64, level: f64) -> (f64, f64) {
        let df = (self.fit.n - 4) as f64;
        let s2 = self.fit.rss / df;
        let b = self.basis(x);
        let leverage = (b.transpose() * &self.fit.xtx_pinv * &b)[(0, 0)];
        let t = StudentsT::new(0.0, 1.0, df)
            .expect("df >= 1")
            .inverse_cdf(0.5 + level / 2.0);
        let half = t * (s2 * (1.0 + leverage)).sqrt();
        let centre = self.predict(x);
        (centre - half, centre + half)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenEntry {
    pub parameter: String,
    pub statistic: String,
    pub f_statistic: Option<f64>,
    pub r_squared: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScreeningReport {
    pub entries: Vec<ScreenEntry>,
}

impl ScreeningReport {
    pub fn get(&self, parameter: &str, statistic: &str) -> Option<&ScreenEntry> {
        self.entries
            .iter()
            .find(|e| e.parameter == parameter && e.statistic == statistic)
    }

    /// Statistic with the highest R^2 for `parameter`.
    pub fn best_for(&self, parameter: &str) -> Option<&ScreenEntry> {
        self.entries
            .iter()
            .filter(|e| e.parameter == parameter && e.r_squared.is_some())
            .max_by(|a, b| a.r_squared.unwrap().total_cmp(&b.r_squared.unwrap()))
    }

    /// `parameter,statistic,F,R2`; missing values are empty fields.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["parameter", "statistic", "F", "R2"])?;
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.entries {
            w.write_record([
                e.parameter.clone(),
                e.statistic.clone(),
                fmt(e.f_statistic),
                fmt(e.r_squared),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Complete `(statistic, parameter)` pairs across the table.
pub(crate) fn paired_columns(table: &SimTable, param: usize, stat: usize) -> (Vec<f64>, Vec<f64>) {
    table
        .runs
        .iter()
        .filter_map(|r| r.stats[stat].map(|x| (x, r.params.values[param])))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .unzip()
}

/// Regresses every parameter on every statistic with a cubic and reports
/// R^2 and the F statistic. Pairs with constant statistic or too few
/// complete runs are reported as missing.
pub fn cubic_screen(table: &SimTable) -> ScreeningReport {
    let mut entries = Vec::new();
    for (p, param) in table.prior.names().enumerate() {
        for (s, stat) in table.stat_names.iter().enumerate() {
            let (xs, ys) = paired_columns(table, p, s);
            let model = CubicModel::fit(&xs, &ys);
            entries.push(ScreenEntry {
                parameter: param.to_string(),
                statistic: stat.clone(),
                f_statistic: model.as_ref().and_then(|m| m.f_statistic()),
                r_squared: model.as_ref().and_then(|m| m.r_squared()),
                n: xs.len(),
            });
        }
    }
    ScreeningReport { entries }
}
