use std::io::Write;

use nalgebra::DMatrix;

use super::CitationHistory;
use crate::abckde::{scott_factor, SimTable, Weighting};
use crate::sumstats::regression::{fit_glm, Family};
use crate::sumstats::StatVector;
use crate::{Error, Result};

pub const SD_CITATIONS: &str = "sd_citations";
pub const P_COLD: &str = "p_cold";
pub const GAMMA_CORP: &str = "gamma_corp";
pub const GAMMA_CROWN: &str = "gamma_crown";
pub const GAMMA_DIS: &str = "gamma_dis";

pub const CITATION_STAT_NAMES: [&str; 5] =
    [SD_CITATIONS, P_COLD, GAMMA_CORP, GAMMA_CROWN, GAMMA_DIS];

/// How "going cold" transitions are combined across cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColdPooling {
    /// One ratio over all cases' transitions.
    #[default]
    Pooled,
    /// Mean of per-case ratios over cases with a cited step.
    PerCaseMean,
}

/// Share of steps following a cited step in which the case receives no
/// citation. `None` when no case is ever cited before the last step.
pub fn p_cold(history: &CitationHistory, pooling: ColdPooling) -> Option<f64> {
    let n = history.n_cases();
    let mut hot = vec![0u64; n];
    let mut cold = vec![0u64; n];
    for t in 1..history.n_steps() {
        let prev = history.step_counts(t - 1);
        let now = history.step_counts(t);
        for (i, &c) in prev.iter().enumerate() {
            if c >= 1 {
                hot[i] += 1;
                cold[i] += u64::from(now[i] == 0);
            }
        }
    }
    match pooling {
        ColdPooling::Pooled => {
            let h: u64 = hot.iter().sum();
            (h > 0).then(|| cold.iter().sum::<u64>() as f64 / h as f64)
        }
        ColdPooling::PerCaseMean => {
            let ratios: Vec<f64> = hot
                .iter()
                .zip(&cold)
                .filter(|(&h, _)| h > 0)
                .map(|(&h, &c)| c as f64 / h as f64)
                .collect();
            (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64)
        }
    }
}

/// Poisson log-link regression of per-case total citations on an intercept
/// and the corporate, crown and dissent flags. Flags that are constant over
/// the cases are dropped and reported missing; a failed fit leaves every
/// coefficient missing.
pub fn poisson_glm(history: &CitationHistory) -> [Option<f64>; 3] {
    let cases = history.cases();
    let n = cases.len();
    let mut out = [None; 3];
    if n < 4 {
        return out;
    }
    let flags: [Vec<f64>; 3] = [
        cases.iter().map(|c| f64::from(u8::from(c.corp))).collect(),
        cases.iter().map(|c| f64::from(u8::from(c.crown))).collect(),
        cases
            .iter()
            .map(|c| f64::from(u8::from(c.dissent)))
            .collect(),
    ];
    let kept: Vec<usize> = (0..3)
        .filter(|&k| flags[k].iter().any(|&v| v != flags[k][0]))
        .collect();
    if kept.is_empty() {
        return out;
    }
    let design = DMatrix::from_fn(n, kept.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            flags[kept[j - 1]][i]
        }
    });
    let y: Vec<f64> = history.totals().iter().map(|&t| t as f64).collect();
    if let Some(fit) = fit_glm(&design, &y, None, Family::Poisson, 50, 1e-8) {
        for (j, &k) in kept.iter().enumerate() {
            out[k] = Some(fit.coefficients[j + 1]);
        }
    }
    out
}

/// The five citation statistics of [`CITATION_STAT_NAMES`]: sample standard
/// deviation of per-case totals, going-cold probability and the three flag
/// coefficients.
pub fn citation_stats(history: &CitationHistory, pooling: ColdPooling) -> StatVector {
    let totals = history.totals();
    let n = totals.len();
    let sd = (n >= 2).then(|| {
        let mean = totals.iter().map(|&t| t as f64).sum::<f64>() / n as f64;
        let ss: f64 = totals.iter().map(|&t| (t as f64 - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    let [corp, crown, dis] = poisson_glm(history);
    StatVector::new(
        CITATION_STAT_NAMES.iter().map(|s| s.to_string()).collect(),
        vec![sd, p_cold(history, pooling), corp, crown, dis],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbcEstimate {
    pub parameter: String,
    pub estimate: f64,
}

/// Kernel-weighted mean of each parameter.
///
/// Each complete run's distance to `observed` is the Euclidean norm of the
/// statistic differences divided by their cross-run sample standard
/// deviations (dimensions with zero or undefined spread are skipped). The
/// run weight is `exp(-d^2 / (2 h^2))` times its mass, with
/// `h = n^(-1 / (d + 4))` over all parameter and statistic dimensions.
pub fn abc_estimate(
    table: &SimTable,
    observed: &StatVector,
    weighting: Weighting,
) -> Result<Vec<AbcEstimate>> {
    let ns = table.stat_names.len();
    let obs = table
        .stat_names
        .iter()
        .map(|name| {
            observed
                .get(name)
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::MissingStatistic(name.clone()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let runs: Vec<(&[f64], f64, Vec<f64>)> = table
        .runs
        .iter()
        .filter_map(|r| {
            let s: Option<Vec<f64>> = r
                .stats
                .iter()
                .map(|v| v.filter(|x| x.is_finite()))
                .collect();
            s.map(|s| (r.params.values.as_slice(), r.params.prior_density, s))
        })
        .collect();
    let n = runs.len();
    if n == 0 {
        return Err(Error::TooFewRuns("no run has every statistic".into()));
    }
    let sd: Vec<Option<f64>> = (0..ns)
        .map(|j| {
            if n < 2 {
                return None;
            }
            let mean = runs.iter().map(|r| r.2[j]).sum::<f64>() / n as f64;
            let var = runs.iter().map(|r| (r.2[j] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            Some(var.sqrt()).filter(|&s| s > 0.0)
        })
        .collect();
    let h = scott_factor(n, table.prior.len() + ns);
    let weights: Vec<f64> = runs
        .iter()
        .map(|(_, density, s)| {
            let d2: f64 = (0..ns)
                .filter_map(|j| sd[j].map(|sd| ((s[j] - obs[j]) / sd).powi(2)))
                .sum();
            let mass = match weighting {
                Weighting::PriorInverse => 1.0 / density,
                Weighting::Uniform => 1.0,
            };
            (-0.5 * d2 / (h * h)).exp() * mass
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::WeightsUnderflow);
    }
    Ok(table
        .prior
        .names()
        .enumerate()
        .map(|(k, name)| AbcEstimate {
            parameter: name.to_string(),
            estimate: runs
                .iter()
                .zip(&weights)
                .map(|(r, w)| w * r.0[k])
                .sum::<f64>()
                / total,
        })
        .collect())
}

/// `parameter,estimate`.
pub fn write_abc_estimate<W: Write>(estimates: &[AbcEstimate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["parameter", "estimate"])?;
    for e in estimates {
        w.write_record([e.parameter.clone(), e.estimate.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::Case;
    use super::*;

    fn single(counts: &[u32]) -> CitationHistory {
        let case = Case {
            created_step: 0,
            corp: false,
            crown: false,
            dissent: false,
        };
        CitationHistory::new(vec![case], counts.iter().map(|&c| vec![c]).collect()).unwrap()
    }

    #[test]
    fn cold_after_every_hot_step() {
        assert_eq!(
            p_cold(&single(&[1, 0, 2, 0]), ColdPooling::Pooled),
            Some(1.0)
        );
        assert_eq!(p_cold(&single(&[1, 1, 1]), ColdPooling::Pooled), Some(0.0));
        assert_eq!(p_cold(&single(&[0, 0, 5]), ColdPooling::Pooled), None);
    }

    #[test]
    fn pooling_variants_differ() {
        let cases = vec![
            Case {
                created_step: 0,
                corp: false,
                crown: false,
                dissent: false,
            };
            2
        ];
        // case 0: hot, cold, hot, cold -> 2/2; case 1: hot x3 then cold -> 1/3
        let h = CitationHistory::new(cases, vec![vec![1, 1], vec![0, 1], vec![1, 1], vec![0, 0]])
            .unwrap();
        assert_eq!(p_cold(&h, ColdPooling::Pooled), Some(3.0 / 5.0));
        assert_eq!(
            p_cold(&h, ColdPooling::PerCaseMean),
            Some((1.0 + 1.0 / 3.0) / 2.0)
        );
    }

    fn flagged(flags: &[(bool, bool, bool)], totals: &[u32]) -> CitationHistory {
        let cases = flags
            .iter()
            .map(|&(corp, crown, dissent)| Case {
                created_step: 0,
                corp,
                crown,
                dissent,
            })
            .collect();
        CitationHistory::new(cases, vec![totals.to_vec()]).unwrap()
    }

    #[test]
    fn saturated_flag_coefficient() {
        let h = flagged(
            &[
                (false, false, true),
                (false, false, true),
                (true, false, true),
                (true, false, true),
            ],
            &[2, 2, 4, 4],
        );
        let [corp, crown, dis] = poisson_glm(&h);
        assert!((corp.unwrap() - 2f64.ln()).abs() < 1e-8);
        assert_eq!((crown, dis), (None, None));
    }

    #[test]
    fn no_flags_no_coefficients() {
        let h = flagged(&[(false, false, false); 5], &[1, 2, 3, 4, 5]);
        assert_eq!(poisson_glm(&h), [None; 3]);
    }

    #[test]
    fn identical_totals_have_zero_sd() {
        let h = flagged(&[(false, false, false); 3], &[7, 7, 7]);
        assert_eq!(
            citation_stats(&h, ColdPooling::Pooled).get(SD_CITATIONS),
            Some(0.0)
        );
    }
}
