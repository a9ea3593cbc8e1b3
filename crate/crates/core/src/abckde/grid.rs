use std::io::Write;

use rayon::prelude::*;

use super::kde::{log_kernel_norm, log_sum_exp, KdeModel};
use crate::sumstats::StatVector;
use crate::{Error, Result};

/// Grid size for per-parameter posterior summaries.
pub const SUMMARY_RESOLUTION: usize = 512;
pub const DEFAULT_HDR_LEVEL: f64 = 0.95;

/// Treatment of parameters that are not plotted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SliceMode {
    /// Average the density over a midpoint lattice spanning the bounds.
    #[default]
    Marginalize,
    /// Fix each at the mode of its own one-dimensional conditional.
    FixAtMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GridOptions {
    pub slice: SliceMode,
    /// Lattice points per marginalised dimension; the grid resolution when
    /// `None`.
    pub marginal_resolution: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub name: String,
    /// Grid values in original parameter units.
    pub values: Vec<f64>,
}

/// Normalised conditional density over one or two parameter axes. For two
/// axes the density is row-major with the first axis slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub axes: Vec<GridAxis>,
    pub density: Vec<f64>,
    /// Log of the trapezoidal integral of the raw estimate.
    pub log_normalization: f64,
}

fn trapezoid_weights(values: &[f64]) -> Vec<f64> {
    let r = values.len();
    let mut w = vec![0.0; r];
    for k in 0..r - 1 {
        let h = 0.5 * (values[k + 1] - values[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    w
}

impl DensityGrid {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    /// Trapezoidal quadrature weight of each grid point.
    pub fn cell_weights(&self) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = self
            .axes
            .iter()
            .map(|a| trapezoid_weights(&a.values))
            .collect();
        match per_axis.as_slice() {
            [a] => a.clone(),
            [a, b] => a
                .iter()
                .flat_map(|wa| b.iter().map(move |wb| wa * wb))
                .collect(),
            _ => unreachable!("grids have one or two axes"),
        }
    }

    /// Trapezoidal integral of the density; 1 up to rounding.
    pub fn integral(&self) -> f64 {
        self.cell_weights()
            .iter()
            .zip(&self.density)
            .map(|(w, h)| w * h)
            .sum()
    }

    /// Grid value(s) at the first maximum of the density.
    pub fn argmax(&self) -> Vec<f64> {
        let k =
            self.density.iter().enumerate().fold(
                0,
                |best, (i, &h)| if h > self.density[best] { i } else { best },
            );
        match self.axes.as_slice() {
            [a] => vec![a.values[k]],
            [a, b] => {
                let r = b.values.len();
                vec![a.values[k / r], b.values[k % r]]
            }
            _ => unreachable!("grids have one or two axes"),
        }
    }

    /// `param_a,param_b,value_a,value_b,density`; two-axis grids only.
    pub fn write_grid2d_csv<W: Write>(&self, out: W) -> Result<()> {
        let [a, b] = self.axes.as_slice() else {
            return Err(Error::InvalidParameter(format!(
                "grid2d needs two axes, grid has {}",
                self.axes.len()
            )));
        };
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["param_a", "param_b", "value_a", "value_b", "density"])?;
        for (i, va) in a.values.iter().enumerate() {
            for (j, vb) in b.values.iter().enumerate() {
                let h = self.density[i * b.values.len() + j];
                w.write_record([
                    a.name.clone(),
                    b.name.clone(),
                    va.to_string(),
                    vb.to_string(),
                    h.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Scaled observed statistics, checked against the simulated support.
fn scaled_observed(model: &KdeModel, observed: &StatVector) -> Result<Vec<f64>> {
    let np = model.n_params();
    model
        .stat_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let v = observed
                .get(name)
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::MissingStatistic(name.clone()))?;
            let y = model.scale_stat(j, v);
            let band = 3.0 * model.bandwidths[np + j];
            let (qlo, qhi) = model.stat_bounds[j];
            if y < -band || y > 1.0 + band {
                return Err(Error::ObservedOutOfSupport {
                    name: name.clone(),
                    value: v,
                    lo: qlo - band * (qhi - qlo),
                    hi: qhi + band * (qhi - qlo),
                });
            }
            if !(0.0..=1.0).contains(&y) {
                log::warn!("observed {name} = {v} lies outside the simulated range [{qlo}, {qhi}]");
            }
            Ok(y)
        })
        .collect()
}

fn axis_offsets(model: &KdeModel, dim: usize, nodes: &[f64]) -> Vec<Vec<f64>> {
    let s = model.bandwidths[dim];
    (0..model.n_runs())
        .map(|i| {
            let x = model.point(i)[dim];
            nodes
                .iter()
                .map(|&u| -0.5 * ((u - x) / s).powi(2))
                .collect()
        })
        .collect()
}

fn grid_nodes(r: usize) -> Vec<f64> {
    (0..r).map(|k| k as f64 / (r - 1) as f64).collect()
}

/// Conditional density of one or two parameters given the observed
/// statistics, on a `resolution`-point grid per axis spanning the prior
/// bounds.
///
/// The estimate is evaluated with statistic coordinates fixed at the scaled
/// observation. Remaining parameters are either averaged over a midpoint
/// lattice of the unit interval, which the product kernel lets us do one
/// dimension at a time, or fixed at their one-dimensional modes. The result
/// is normalised by trapezoidal quadrature in original units.
pub fn conditional_grid(
    model: &KdeModel,
    observed: &StatVector,
    plot: &[&str],
    resolution: usize,
    options: &GridOptions,
) -> Result<DensityGrid> {
    if !(1..=2).contains(&plot.len()) {
        return Err(Error::InvalidParameter(format!(
            "{} plot dimensions, need 1 or 2",
            plot.len()
        )));
    }
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid resolution {resolution} < 2"
        )));
    }
    let dims = plot
        .iter()
        .map(|p| {
            model
                .param_index(p)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown parameter `{p}`")))
        })
        .collect::<Result<Vec<usize>>>()?;
    if dims.len() == 2 && dims[0] == dims[1] {
        return Err(Error::InvalidParameter(format!(
            "parameter `{}` plotted twice",
            plot[0]
        )));
    }
    let y = scaled_observed(model, observed)?;
    let np = model.n_params();
    let n = model.n_runs();
    let s = &model.bandwidths;

    let mut base: Vec<f64> = (0..n)
        .map(|i| {
            let p = model.point(i);
            let q: f64 = y
                .iter()
                .enumerate()
                .map(|(j, &yj)| ((yj - p[np + j]) / s[np + j]).powi(2))
                .sum();
            model.log_weights[i] - 0.5 * q
        })
        .collect();

    let others: Vec<usize> = (0..np).filter(|k| !dims.contains(k)).collect();
    match options.slice {
        SliceMode::Marginalize => {
            let m = options.marginal_resolution.unwrap_or(resolution).max(1);
            let lattice: Vec<f64> = (0..m).map(|t| (t as f64 + 0.5) / m as f64).collect();
            let ln_m = (m as f64).ln();
            for &k in &others {
                for (i, b) in base.iter_mut().enumerate() {
                    let x = model.point(i)[k];
                    let terms = lattice.iter().map(|&u| -0.5 * ((u - x) / s[k]).powi(2));
                    *b += log_sum_exp(terms) - ln_m;
                }
            }
        }
        SliceMode::FixAtMode => {
            let marginal = GridOptions {
                slice: SliceMode::Marginalize,
                ..*options
            };
            for &k in &others {
                let g = conditional_grid(
                    model,
                    observed,
                    &[model.param_names[k].as_str()],
                    resolution,
                    &marginal,
                )?;
                let u = model.scale_param(k, g.argmax()[0]);
                for (i, b) in base.iter_mut().enumerate() {
                    *b -= 0.5 * ((u - model.point(i)[k]) / s[k]).powi(2);
                }
            }
        }
    }

    let nodes = grid_nodes(resolution);
    let first = axis_offsets(model, dims[0], &nodes);
    let second = dims.get(1).map(|&d| axis_offsets(model, d, &nodes));
    let rows: Vec<Vec<f64>> = (0..resolution)
        .into_par_iter()
        .map(|a| match &second {
            None => vec![log_sum_exp((0..n).map(|i| base[i] + first[i][a]))],
            Some(sec) => (0..resolution)
                .map(|b| log_sum_exp((0..n).map(|i| base[i] + first[i][a] + sec[i][b])))
                .collect(),
        })
        .collect();
    let log_h: Vec<f64> = rows.into_iter().flatten().collect();

    let axes: Vec<GridAxis> = dims
        .iter()
        .map(|&d| GridAxis {
            name: model.param_names[d].clone(),
            values: nodes.iter().map(|&u| model.unscale_param(d, u)).collect(),
        })
        .collect();
    let max = log_h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::WeightsUnderflow);
    }
    let mut grid = DensityGrid {
        axes,
        density: log_h.iter().map(|l| (l - max).exp()).collect(),
        log_normalization: 0.0,
    };
    let integral = grid.integral();
    for h in &mut grid.density {
        *h /= integral;
    }
    grid.log_normalization = max + integral.ln() + log_kernel_norm(s);
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub parameter: String,
    pub mean: f64,
    pub mode: f64,
    pub hdr_lo: f64,
    pub hdr_hi: f64,
    pub level: f64,
}

/// Mean, mode and highest-density region at `level` for every parameter,
/// from one-dimensional conditionals on [`SUMMARY_RESOLUTION`] points.
///
/// The region is the smallest set of grid points, taken in decreasing
/// density order, whose quadrature mass reaches `level`; its extent is
/// reported.
pub fn posterior_summaries(
    model: &KdeModel,
    observed: &StatVector,
    level: f64,
    options: &GridOptions,
) -> Result<Vec<PosteriorSummary>> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "credible level {level} not in (0, 1]"
        )));
    }
    model
        .param_names
        .iter()
        .map(|name| {
            let g = conditional_grid(
                model,
                observed,
                &[name.as_str()],
                SUMMARY_RESOLUTION,
                options,
            )?;
            Ok(summarize(&g, level))
        })
        .collect()
}

fn summarize(g: &DensityGrid, level: f64) -> PosteriorSummary {
    let xs = &g.axes[0].values;
    let w = g.cell_weights();
    let mean = xs
        .iter()
        .zip(&w)
        .zip(&g.density)
        .map(|((x, w), h)| x * w * h)
        .sum();
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| g.density[b].total_cmp(&g.density[a]).then(a.cmp(&b)));
    let (mut lo, mut hi, mut mass) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for k in order {
        lo = lo.min(xs[k]);
        hi = hi.max(xs[k]);
        mass += w[k] * g.density[k];
        if mass >= level * (1.0 - 1e-12) {
            break;
        }
    }
    PosteriorSummary {
        parameter: g.axes[0].name.clone(),
        mean,
        mode: g.argmax()[0],
        hdr_lo: lo,
        hdr_hi: hi,
        level,
    }
}

/// `parameter,mean,mode,hdr_lo,hdr_hi,level`.
pub fn write_posterior_csv<W: Write>(summaries: &[PosteriorSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["parameter", "mean", "mode", "hdr_lo", "hdr_hi", "level"])?;
    for s in summaries {
        w.write_record([
            s.parameter.clone(),
            s.mean.to_string(),
            s.mode.to_string(),
            s.hdr_lo.to_string(),
            s.hdr_hi.to_string(),
            s.level.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
