use nalgebra::{DMatrix, DVector};

/// Coefficient magnitude treated as divergence (separation) in IRLS.
pub const DIVERGENCE_LIMIT: f64 = 30.0;

/// Weighted least-squares slope of `y` on `t`. Points with non-positive or
/// non-finite weight, or non-finite coordinates, are ignored. `None` when
/// fewer than two usable points remain or `t` is constant over them.
pub fn weighted_slope(points: &[(f64, f64)], weights: &[f64]) -> Option<f64> {
    assert_eq!(points.len(), weights.len());
    let usable: Vec<(f64, f64, f64)> = points
        .iter()
        .zip(weights)
        .filter(|&(&(t, y), &w)| w > 0.0 && w.is_finite() && t.is_finite() && y.is_finite())
        .map(|(&(t, y), &w)| (t, y, w))
        .collect();
    if usable.len() < 2 {
        return None;
    }
    let sw: f64 = usable.iter().map(|p| p.2).sum();
    let t_bar = usable.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let y_bar = usable.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, y, w) in &usable {
        sxy += w * (t - t_bar) * (y - y_bar);
        sxx += w * (t - t_bar) * (t - t_bar);
    }
    if sxx <= 0.0 || sxx <= f64::EPSILON * sw * t_bar.abs().max(1.0).powi(2) {
        return None;
    }
    Some(sxy / sxx)
}

/// Ordinary least-squares slope (all weights one).
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    weighted_slope(points, &vec![1.0; points.len()])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Binomial counts with a logit link; needs trial counts.
    Binomial,
    /// Poisson counts with a log link.
    Poisson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmFit {
    pub coefficients: Vec<f64>,
    pub iterations: usize,
}

/// Fits a GLM by iteratively reweighted least squares.
///
/// Starts from the data (`mu = (y + 0.5) / (n + 1)` for binomial,
/// `mu = y + 0.1` for Poisson) and stops when the largest coefficient change
/// is below `tol * max(1, max |beta|)`. Returns `None` on a singular weighted
/// design, on any coefficient exceeding [`DIVERGENCE_LIMIT`] in magnitude, or
/// when `max_iter` is reached first.
pub fn fit_glm(
    design: &DMatrix<f64>,
    y: &[f64],
    trials: Option<&[f64]>,
    family: Family,
    max_iter: usize,
    tol: f64,
) -> Option<GlmFit> {
    let n = design.nrows();
    let p = design.ncols();
    assert_eq!(y.len(), n);
    let ones = vec![1.0; n];
    let trials = trials.unwrap_or(&ones);

    let mut eta: Vec<f64> = match family {
        Family::Binomial => (0..n)
            .map(|i| {
                let pi = (y[i] + 0.5) / (trials[i] + 1.0);
                (pi / (1.0 - pi)).ln()
            })
            .collect(),
        Family::Poisson => y.iter().map(|&yi| (yi + 0.1).ln()).collect(),
    };
    let mut beta: Option<DVector<f64>> = None;

    for iter in 1..=max_iter {
        let mut xtwx = DMatrix::<f64>::zeros(p, p);
        let mut xtwz = DVector::<f64>::zeros(p);
        for i in 0..n {
            let (w, z) = match family {
                Family::Binomial => {
                    let pi = 1.0 / (1.0 + (-eta[i]).exp());
                    let w = trials[i] * pi * (1.0 - pi);
                    if w <= 0.0 {
                        continue;
                    }
                    (w, eta[i] + (y[i] - trials[i] * pi) / w)
                }
                Family::Poisson => {
                    let mu = eta[i].exp();
                    if mu <= 0.0 {
                        continue;
                    }
                    (mu, eta[i] + (y[i] - mu) / mu)
                }
            };
            let row = design.row(i);
            for a in 0..p {
                let wa = w * row[a];
                xtwz[a] += wa * z;
                for b in a..p {
                    xtwx[(a, b)] += wa * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                xtwx[(a, b)] = xtwx[(b, a)];
            }
        }
        let next = xtwx.cholesky()?.solve(&xtwz);
        if next
            .iter()
            .any(|b| !b.is_finite() || b.abs() > DIVERGENCE_LIMIT)
        {
            return None;
        }
        eta = (design * &next).iter().copied().collect();
        if let Some(prev) = &beta {
            let change = (&next - prev).amax();
            if change <= tol * next.amax().max(1.0) {
                return Some(GlmFit {
                    coefficients: next.iter().copied().collect(),
                    iterations: iter,
                });
            }
        }
        beta = Some(next);
    }
    None
}

/// Slope of a binomial logistic regression of `k / n` on `t`: the change
/// in log-odds per unit `t`. `None` without both a success and a failure,
/// with constant `t`, or when the fit separates.
pub fn log_odds_slope(points: &[(f64, u64, u64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let successes: u64 = points.iter().map(|p| p.1).sum();
    let trials: u64 = points.iter().map(|p| p.2).sum();
    if successes == 0 || successes == trials {
        return None;
    }
    let t0 = points[0].0;
    if points.iter().all(|p| p.0 == t0) {
        return None;
    }
    let design = DMatrix::from_fn(
        points.len(),
        2,
        |i, j| if j == 0 { 1.0 } else { points[i].0 },
    );
    let y: Vec<f64> = points.iter().map(|p| p.1 as f64).collect();
    let n: Vec<f64> = points.iter().map(|p| p.2 as f64).collect();
    fit_glm(&design, &y, Some(&n), Family::Binomial, 100, 1e-10).map(|f| f.coefficients[1])
}

/// Least-squares fit through the SVD, tolerant of rank deficiency.
#[derive(Debug, Clone)]
pub struct LinearFit {
    pub coefficients: DVector<f64>,
    pub rss: f64,
    pub tss: f64,
    pub n: usize,
    pub rank: usize,
    /// Moore-Penrose inverse of `X'X`.
    pub xtx_pinv: DMatrix<f64>,
}

impl LinearFit {
    pub fn fit(design: &DMatrix<f64>, y: &DVector<f64>) -> Option<Self> {
        let n = design.nrows();
        if n == 0 || y.len() != n {
            return None;
        }
        let svd = design.clone().svd(true, true);
        let s_max = svd.singular_values.max();
        let eps = s_max * (n.max(design.ncols()) as f64) * f64::EPSILON;
        let coefficients = svd.solve(y, eps).ok()?;
        let v_t = svd.v_t.as_ref()?;
        let p = design.ncols();
        let mut xtx_pinv = DMatrix::zeros(p, p);
        let mut rank = 0;
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s > eps {
                rank += 1;
                let v = v_t.row(k).transpose();
                xtx_pinv += (&v * v.transpose()) / (s * s);
            }
        }
        let fitted = design * &coefficients;
        let rss = (y - fitted).norm_squared();
        let mean = y.mean();
        let tss = y.iter().map(|v| (v - mean).powi(2)).sum();
        Some(Self {
            coefficients,
            rss,
            tss,
            n,
            rank,
            xtx_pinv,
        })
    }

    /// Coefficient of determination, clamped to `[0, 1]`; `None` for a
    /// constant response.
    pub fn r_squared(&self) -> Option<f64> {
        if self.tss <= 0.0 {
            return None;
        }
        Some((1.0 - self.rss / self.tss).clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_line() {
        let pts: Vec<(f64, f64)> = (0..7)
            .map(|i| (i as f64 / 6.0, 2.0 * i as f64 / 6.0))
            .collect();
        let w = [0.5, 1.0, 3.0, 1.0, 2.0, 7.0, 0.1];
        assert!((weighted_slope(&pts, &w).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_slope() {
        assert_eq!(
            weighted_slope(&[(0.0, 0.0), (1.0, 1.0)], &[1.0, 1.0]),
            Some(1.0)
        );
    }

    #[test]
    fn symmetric_tent_has_zero_slope() {
        let s = weighted_slope(&[(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)], &[1.0, 2.0, 1.0]).unwrap();
        assert!(s.abs() < 1e-15);
    }

    #[test]
    fn degenerate_slopes_are_missing() {
        assert_eq!(weighted_slope(&[(0.3, 1.0), (0.3, 2.0)], &[1.0, 1.0]), None);
        assert_eq!(weighted_slope(&[(0.0, 1.0)], &[1.0]), None);
        assert_eq!(weighted_slope(&[(0.0, 1.0), (1.0, 2.0)], &[1.0, 0.0]), None);
    }

    #[test]
    fn log_odds_flat() {
        let pts = [(0.0, 2, 4), (0.5, 1, 2), (1.0, 3, 6)];
        assert!(log_odds_slope(&pts).unwrap().abs() < 1e-9);
    }

    #[test]
    fn log_odds_saturated_two_groups() {
        let s = log_odds_slope(&[(0.0, 2, 4), (1.0, 3, 4)]).unwrap();
        assert!((s - 3f64.ln()).abs() < 1e-9, "{s}");
    }

    #[test]
    fn log_odds_separation_is_missing() {
        assert_eq!(log_odds_slope(&[(0.0, 4, 4), (1.0, 4, 4)]), None);
        assert_eq!(log_odds_slope(&[(0.0, 0, 4), (1.0, 0, 4)]), None);
        // complete separation on t
        let pts: Vec<(f64, u64, u64)> = (0..10).map(|i| (i as f64, u64::from(i >= 5), 1)).collect();
        assert_eq!(log_odds_slope(&pts), None);
    }

    #[test]
    fn poisson_saturated_two_groups() {
        // Totals 2 for flag = 0 and 4 for flag = 1.
        let design = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        let fit = fit_glm(
            &design,
            &[2.0, 2.0, 4.0, 4.0],
            None,
            Family::Poisson,
            50,
            1e-8,
        )
        .unwrap();
        assert!((fit.coefficients[0] - 2f64.ln()).abs() < 1e-8);
        assert!((fit.coefficients[1] - 2f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn linear_fit_rank_deficient() {
        // Duplicate column: rank 1, fitted values still exact.
        let design = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let y = DVector::from_vec(vec![2.0, 4.0, 6.0]);
        let fit = LinearFit::fit(&design, &y).unwrap();
        assert_eq!(fit.rank, 1);
        assert!(fit.rss < 1e-20);
        assert_eq!(fit.r_squared(), Some(1.0));
    }
}
