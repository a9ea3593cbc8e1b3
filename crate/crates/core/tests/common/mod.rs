//! Independent reference implementations shared by the integration tests
//! and the acceptance suite. Nothing here calls the library's numerics.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use abcnet::abckde::{SimRun, SimTable};
use abcnet::linktrace::SampleRecord;
use abcnet::netgen::{Distribution, PopulationGraph, PriorEntry, PriorSpec};
use rand::Rng;

/// Dense Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Weighted least squares through the raw normal equations.
pub fn wls(rows: &[Vec<f64>], y: &[f64], w: &[f64]) -> Vec<f64> {
    let p = rows[0].len();
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for ((x, &yi), &wi) in rows.iter().zip(y).zip(w) {
        for j in 0..p {
            b[j] += wi * x[j] * yi;
            for k in 0..p {
                a[j][k] += wi * x[j] * x[k];
            }
        }
    }
    solve(a, b)
}

pub fn wls_slope(points: &[(f64, f64)], weights: &[f64]) -> f64 {
    let rows: Vec<Vec<f64>> = points.iter().map(|p| vec![1.0, p.0]).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    wls(&rows, &y, weights)[1]
}

/// Newton-Raphson on the binomial log-likelihood with a logit link.
pub fn logistic_newton(points: &[(f64, u64, u64)]) -> f64 {
    let mut beta = [0.0f64; 2];
    for _ in 0..200 {
        let mut g = [0.0; 2];
        let mut h = [[0.0; 2]; 2];
        for &(t, k, n) in points {
            let x = [1.0, t];
            let p = 1.0 / (1.0 + (-(beta[0] + beta[1] * t)).exp());
            for j in 0..2 {
                g[j] += x[j] * (k as f64 - n as f64 * p);
                for l in 0..2 {
                    h[j][l] += n as f64 * p * (1.0 - p) * x[j] * x[l];
                }
            }
        }
        let step = solve(h.iter().map(|r| r.to_vec()).collect(), g.to_vec());
        beta[0] += step[0];
        beta[1] += step[1];
        if step.iter().all(|s| s.abs() < 1e-13) {
            break;
        }
    }
    beta[1]
}

/// Newton-Raphson on the Poisson log-likelihood with a log link.
pub fn poisson_newton(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = rows[0].len();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut beta = vec![0.0; p];
    beta[0] = mean.ln();
    for _ in 0..200 {
        let mut g = vec![0.0; p];
        let mut h = vec![vec![0.0; p]; p];
        for (x, &yi) in rows.iter().zip(y) {
            let mu = x.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>().exp();
            for j in 0..p {
                g[j] += x[j] * (yi - mu);
                for k in 0..p {
                    h[j][k] += mu * x[j] * x[k];
                }
            }
        }
        let step = solve(h, g);
        for (b, s) in beta.iter_mut().zip(&step) {
            *b += s;
        }
        if step.iter().all(|s| s.abs() < 1e-13) {
            break;
        }
    }
    beta
}

/// R^2 and overall F of `y ~ 1 + x + x^2 + x^3` on raw `x`.
pub fn cubic_r2_f(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x, x * x, x * x * x]).collect();
    let beta = wls(&rows, ys, &vec![1.0; xs.len()]);
    let n = xs.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let tss: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let rss: f64 = rows
        .iter()
        .zip(ys)
        .map(|(r, y)| (y - r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>()).powi(2))
        .sum();
    ((tss - rss) / tss, ((tss - rss) / 3.0) / (rss / (n - 4.0)))
}

/// Direct-sum kernel estimate built from the raw table.
pub struct KdeOracle {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub sigma: Vec<f64>,
    pub param_bounds: Vec<(f64, f64)>,
    pub stat_bounds: Vec<(f64, f64)>,
}

impl KdeOracle {
    pub fn new(table: &SimTable, prior_weighted: bool) -> Self {
        let n = table.runs.len();
        let param_bounds: Vec<(f64, f64)> =
            table.prior.entries().iter().map(|e| e.bounds).collect();
        let stat_bounds: Vec<(f64, f64)> = (0..table.stat_names.len())
            .map(|j| {
                let col: Vec<f64> = table.runs.iter().map(|r| r.stats[j].unwrap()).collect();
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let pad = (hi - lo) / (n as f64 + 1.0);
                (lo - pad, hi + pad)
            })
            .collect();
        let points: Vec<Vec<f64>> = table
            .runs
            .iter()
            .map(|r| {
                let mut p: Vec<f64> = r
                    .params
                    .values
                    .iter()
                    .zip(&param_bounds)
                    .map(|(v, b)| (v - b.0) / (b.1 - b.0))
                    .collect();
                p.extend(
                    r.stats
                        .iter()
                        .zip(&stat_bounds)
                        .map(|(v, b)| (v.unwrap() - b.0) / (b.1 - b.0)),
                );
                p
            })
            .collect();
        let d = points[0].len();
        let factor = (n as f64).powf(-1.0 / (d as f64 + 4.0));
        let sigma = (0..d)
            .map(|j| {
                let m = points.iter().map(|p| p[j]).sum::<f64>() / n as f64;
                let v = points.iter().map(|p| (p[j] - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
                (factor * v.sqrt()).max(1e-4)
            })
            .collect();
        let weights = table
            .runs
            .iter()
            .map(|r| {
                if prior_weighted {
                    1.0 / r.params.prior_density
                } else {
                    1.0
                }
            })
            .collect();
        Self {
            points,
            weights,
            sigma,
            param_bounds,
            stat_bounds,
        }
    }

    pub fn density(&self, q: &[f64]) -> f64 {
        let norm: f64 = self
            .sigma
            .iter()
            .map(|s| 1.0 / ((2.0 * PI).sqrt() * s))
            .product();
        let sum: f64 = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| {
                let e: f64 = p
                    .iter()
                    .zip(q)
                    .zip(&self.sigma)
                    .map(|((a, b), s)| ((a - b) / s).powi(2))
                    .sum();
                w * (-0.5 * e).exp()
            })
            .sum();
        norm * sum
    }

    pub fn scaled_observed(&self, obs: &[f64]) -> Vec<f64> {
        obs.iter()
            .zip(&self.stat_bounds)
            .map(|(v, b)| (v - b.0) / (b.1 - b.0))
            .collect()
    }

    /// Conditional grid on plotted parameter indices, averaging every other
    /// parameter over an `m`-point midpoint lattice by brute force, then
    /// trapezoid-normalised in original units. Row-major, first axis slowest.
    pub fn conditional(&self, obs: &[f64], plot: &[usize], r: usize, m: usize) -> Vec<f64> {
        let np = self.param_bounds.len();
        let y = self.scaled_observed(obs);
        let others: Vec<usize> = (0..np).filter(|k| !plot.contains(k)).collect();
        let nodes: Vec<f64> = (0..r).map(|k| k as f64 / (r - 1) as f64).collect();
        let lattice: Vec<f64> = (0..m).map(|t| (t as f64 + 0.5) / m as f64).collect();
        let cells = r.pow(plot.len() as u32);
        let mut raw = vec![0.0; cells];
        for (c, v) in raw.iter_mut().enumerate() {
            let idx: Vec<usize> = if plot.len() == 1 {
                vec![c]
            } else {
                vec![c / r, c % r]
            };
            let combos = m.pow(others.len() as u32);
            let mut acc = 0.0;
            for combo in 0..combos {
                let mut q = vec![0.0; np];
                for (a, &k) in plot.iter().enumerate() {
                    q[k] = nodes[idx[a]];
                }
                let mut rest = combo;
                for &k in &others {
                    q[k] = lattice[rest % m];
                    rest /= m;
                }
                q.extend(&y);
                acc += self.density(&q);
            }
            *v = acc / combos as f64;
        }
        let trap = |k: usize, span: f64| {
            let h = span / (r - 1) as f64;
            if k == 0 || k == r - 1 {
                h / 2.0
            } else {
                h
            }
        };
        let spans: Vec<f64> = plot
            .iter()
            .map(|&k| self.param_bounds[k].1 - self.param_bounds[k].0)
            .collect();
        let mut integral = 0.0;
        for (c, v) in raw.iter().enumerate() {
            let w = if plot.len() == 1 {
                trap(c, spans[0])
            } else {
                trap(c / r, spans[0]) * trap(c % r, spans[1])
            };
            integral += w * v;
        }
        raw.iter().map(|v| v / integral).collect()
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Three-parameter prior with one geometric entry, so run weights vary.
pub fn mixed_prior() -> PriorSpec {
    PriorSpec::new(vec![
        PriorEntry::new("a", Distribution::Uniform { lo: 0.0, hi: 2.0 }),
        PriorEntry::new(
            "b",
            Distribution::ShiftedGeometric {
                offset: 1.0,
                mean: 4.0,
            },
        ),
        PriorEntry::new("c", Distribution::Uniform { lo: -1.0, hi: 1.0 }),
    ])
    .unwrap()
}

pub fn uniform_prior() -> PriorSpec {
    PriorSpec::new(vec![
        PriorEntry::new("a", Distribution::Uniform { lo: 0.0, hi: 2.0 }),
        PriorEntry::new("b", Distribution::Uniform { lo: 1.0, hi: 5.0 }),
        PriorEntry::new("c", Distribution::Uniform { lo: -1.0, hi: 1.0 }),
    ])
    .unwrap()
}

/// `n` runs with three noisy statistics driven by the parameters.
pub fn synthetic_table<R: Rng>(prior: PriorSpec, n: usize, rng: &mut R) -> SimTable {
    let runs = (0..n)
        .map(|i| {
            let params = abcnet::netgen::draw_parameters(&prior, rng);
            let v = &params.values;
            let mut noise = || rng.random::<f64>() - 0.5;
            let stats = vec![
                Some(v[0] + 0.3 * noise()),
                Some(v[1].ln() + v[2] + 0.3 * noise()),
                Some(v[0] * v[2] + 0.5 * noise()),
            ];
            SimRun {
                run_id: i as u64,
                params,
                stats,
            }
        })
        .collect();
    SimTable {
        prior,
        stat_names: vec!["s1".into(), "s2".into(), "s3".into()],
        runs,
    }
}

/// Structural checks on a sample, written from the definitions: rows in
/// order with unique nodes, counters bounded by degree, sources sampled
/// earlier and adjacent, each source's recruit count matching its
/// recruits, and leaps equal to the rows without a source.
pub fn sample_violations(record: &SampleRecord, graph: &PopulationGraph) -> Vec<String> {
    let mut v = Vec::new();
    let mut seen: HashMap<usize, usize> = HashMap::new();
    let mut recruits: HashMap<usize, usize> = HashMap::new();
    for (i, r) in record.rows.iter().enumerate() {
        if r.order != i {
            v.push(format!("row {i} has order {}", r.order));
        }
        if seen.insert(r.node_id, i).is_some() {
            v.push(format!("node {} sampled twice", r.node_id));
        }
        let deg = graph.neighbors(r.node_id).len();
        if r.pop_degree != deg {
            v.push(format!(
                "node {} degree {} != {deg}",
                r.node_id, r.pop_degree
            ));
        }
        if !(r.links_recruited <= r.links_responding
            && r.links_responding <= r.links_reported
            && r.links_reported <= r.pop_degree)
        {
            v.push(format!("node {} counters out of order", r.node_id));
        }
        if let Some(s) = r.source_id {
            match seen.get(&s) {
                Some(&j) if j < i => {}
                _ => v.push(format!(
                    "node {} recruited by unsampled or later {s}",
                    r.node_id
                )),
            }
            if !graph.neighbors(s).contains(&(r.node_id as u32)) {
                v.push(format!(
                    "recruitment edge ({s}, {}) not in population",
                    r.node_id
                ));
            }
            *recruits.entry(s).or_default() += 1;
        }
    }
    for r in &record.rows {
        let got = recruits.get(&r.node_id).copied().unwrap_or(0);
        if got != r.links_recruited {
            v.push(format!(
                "node {} reports {} recruits, has {got}",
                r.node_id, r.links_recruited
            ));
        }
    }
    let leaps = record.rows.iter().filter(|r| r.source_id.is_none()).count();
    if leaps + record.recruitment_edges().count() != record.len() {
        v.push("leap accounting broken".into());
    }
    let edges: HashSet<(usize, usize)> = record.recruitment_edges().collect();
    if edges.len() != record.len() - leaps {
        v.push("duplicate recruitment edges".into());
    }
    v
}
