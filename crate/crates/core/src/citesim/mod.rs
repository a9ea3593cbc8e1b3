//! Time-stepped citation network under a competitive-attractiveness model.
//!
//! Each step creates the scheduled number of cases, then assigns the
//! scheduled number of citations one at a time to existing cases with
//! probability proportional to `exp(beta . x)`, with covariates frozen for
//! the whole step, then updates the recency and preferential-attachment
//! covariates.

mod io;
mod stats;

pub use io::{read_case_table, read_history, write_case_table, write_history};
pub use stats::{
    abc_estimate, citation_stats, p_cold, poisson_glm, write_abc_estimate, AbcEstimate,
    ColdPooling, CITATION_STAT_NAMES, GAMMA_CORP, GAMMA_CROWN, GAMMA_DIS, P_COLD, SD_CITATIONS,
};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;

use crate::netgen::ParameterSet;
use crate::{Error, Result};

pub const BETA_IRREL: &str = "beta_irrel";
pub const BETA_PA: &str = "beta_pa";
pub const BETA_CORP: &str = "beta_corp";
pub const BETA_CROWN: &str = "beta_crown";
pub const BETA_DIS: &str = "beta_dis";

pub const CITATION_PARAM_NAMES: [&str; 5] = [BETA_IRREL, BETA_PA, BETA_CORP, BETA_CROWN, BETA_DIS];

/// Largest exponent magnitude passed to `exp`.
pub const EXPONENT_CLAMP: f64 = 700.0;

/// One time step of the case schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseStep {
    pub period: String,
    pub cases: usize,
    pub cites: usize,
    pub p_corp: f64,
    pub p_crown: f64,
    pub p_dissent: f64,
}

/// Schedule of new cases and citations per step, in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseTable {
    steps: Vec<CaseStep>,
}

impl CaseTable {
    pub fn new(steps: Vec<CaseStep>) -> Result<Self> {
        for s in &steps {
            for (name, p) in [
                ("p_corp", s.p_corp),
                ("p_crown", s.p_crown),
                ("p_dissent", s.p_dissent),
            ] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParameter(format!(
                        "{}: {name} = {p} not in [0, 1]",
                        s.period
                    )));
                }
            }
        }
        Ok(Self { steps })
    }

    /// Supreme Court of Canada cases and citations, 1950 to 2014, in
    /// five-year steps.
    pub fn supreme_court() -> Self {
        const ROWS: [(&str, usize, usize, f64, f64, f64); 13] = [
            ("1950-4", 220, 1185, 0.32, 0.25, 0.52),
            ("1955-9", 287, 1087, 0.40, 0.17, 0.39),
            ("1960-4", 384, 1363, 0.44, 0.19, 0.31),
            ("1965-9", 398, 1675, 0.43, 0.21, 0.30),
            ("1970-4", 425, 2971, 0.39, 0.19, 0.35),
            ("1975-9", 510, 4482, 0.36, 0.31, 0.33),
            ("1980-4", 590, 5672, 0.29, 0.38, 0.20),
            ("1985-9", 462, 6870, 0.24, 0.49, 0.27),
            ("1990-4", 536, 9433, 0.16, 0.53, 0.33),
            ("1995-9", 564, 12373, 0.24, 0.52, 0.36),
            ("2000-4", 460, 18445, 0.27, 0.37, 0.31),
            ("2005-9", 416, 21076, 0.29, 0.38, 0.32),
            ("2010-4", 313, 24947, 0.26, 0.44, 0.26),
        ];
        let steps = ROWS
            .iter()
            .map(
                |&(period, cases, cites, p_corp, p_crown, p_dissent)| CaseStep {
                    period: period.to_string(),
                    cases,
                    cites,
                    p_corp,
                    p_crown,
                    p_dissent,
                },
            )
            .collect();
        Self { steps }
    }

    pub fn steps(&self) -> &[CaseStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Case {
    pub created_step: usize,
    pub corp: bool,
    pub crown: bool,
    pub dissent: bool,
}

/// Cases ordered by creation step and the citations each received per step.
/// `counts[t]` has one entry per case created at or before step `t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CitationHistory {
    cases: Vec<Case>,
    counts: Vec<Vec<u32>>,
}

impl CitationHistory {
    /// Validates creation order and count-row lengths.
    pub fn new(cases: Vec<Case>, counts: Vec<Vec<u32>>) -> Result<Self> {
        if cases
            .windows(2)
            .any(|w| w[0].created_step > w[1].created_step)
        {
            return Err(Error::InvalidParameter(
                "cases must be ordered by creation step".into(),
            ));
        }
        if let Some(last) = cases.last() {
            if last.created_step >= counts.len() {
                return Err(Error::InvalidParameter(format!(
                    "case created at step {} beyond {} steps",
                    last.created_step,
                    counts.len()
                )));
            }
        }
        for (t, row) in counts.iter().enumerate() {
            let alive = cases.partition_point(|c| c.created_step <= t);
            if row.len() != alive {
                return Err(Error::InvalidParameter(format!(
                    "step {t} has {} counts for {alive} existing cases",
                    row.len()
                )));
            }
        }
        Ok(Self { cases, counts })
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn n_cases(&self) -> usize {
        self.cases.len()
    }

    pub fn n_steps(&self) -> usize {
        self.counts.len()
    }

    /// Citations received by case `i` in step `t`; 0 before creation.
    pub fn count(&self, t: usize, i: usize) -> u32 {
        self.counts[t].get(i).copied().unwrap_or(0)
    }

    /// Per-step rows; row `t` covers cases created at or before `t`.
    pub fn step_counts(&self, t: usize) -> &[u32] {
        &self.counts[t]
    }

    /// Total citations per case over all steps.
    pub fn totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.cases.len()];
        for row in &self.counts {
            for (tot, &c) in totals.iter_mut().zip(row) {
                *tot += u64::from(c);
            }
        }
        totals
    }

    /// Covariates of every case at the start of the step after the last
    /// recorded one.
    pub fn final_states(&self) -> Vec<CaseState> {
        let mut states = Vec::with_capacity(self.cases.len());
        for row in &self.counts {
            while states.len() < row.len() {
                states.push(CaseState::new(self.cases[states.len()]));
            }
            for (s, &c) in states.iter_mut().zip(row) {
                s.update(c);
            }
        }
        states
    }
}

/// Covariates of a case at the start of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseState {
    pub case: Case,
    /// Steps since creation or last citation.
    pub x_irrel: f64,
    /// Square root of the citations received in the previous step.
    pub x_pa: f64,
}

impl CaseState {
    pub fn new(case: Case) -> Self {
        Self {
            case,
            x_irrel: 0.0,
            x_pa: 0.0,
        }
    }

    /// End-of-step update after receiving `cites` citations.
    pub fn update(&mut self, cites: u32) {
        self.x_irrel = if cites > 0 { 0.0 } else { self.x_irrel + 1.0 };
        self.x_pa = f64::from(cites).sqrt();
    }
}

/// Attractiveness coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AttractParams {
    pub irrel: f64,
    pub pa: f64,
    pub corp: f64,
    pub crown: f64,
    pub dis: f64,
}

impl AttractParams {
    /// Reads the coefficients of [`CITATION_PARAM_NAMES`] from a parameter
    /// set whose values follow `names`.
    pub fn from_named<'a>(
        names: impl IntoIterator<Item = &'a str>,
        set: &ParameterSet,
    ) -> Result<Self> {
        let names: Vec<&str> = names.into_iter().collect();
        let get = |want: &str| {
            names
                .iter()
                .position(|&n| n == want)
                .map(|i| set.values[i])
                .ok_or_else(|| Error::InvalidParameter(format!("parameter `{want}` not supplied")))
        };
        Ok(Self {
            irrel: get(BETA_IRREL)?,
            pa: get(BETA_PA)?,
            corp: get(BETA_CORP)?,
            crown: get(BETA_CROWN)?,
            dis: get(BETA_DIS)?,
        })
    }
}

/// Linear predictor `beta . x`, clamped to `[-700, 700]`.
pub fn exponent(state: &CaseState, params: &AttractParams) -> f64 {
    let flag = |b: bool| f64::from(u8::from(b));
    let e = params.irrel * state.x_irrel
        + params.pa * state.x_pa
        + params.corp * flag(state.case.corp)
        + params.crown * flag(state.case.crown)
        + params.dis * flag(state.case.dissent);
    e.clamp(-EXPONENT_CLAMP, EXPONENT_CLAMP)
}

pub fn attractiveness(state: &CaseState, params: &AttractParams) -> f64 {
    exponent(state, params).exp()
}

/// Choice probabilities `exp(e_i) / sum_k exp(e_k)`, computed after
/// subtracting the largest exponent.
pub fn selection_probabilities(exponents: &[f64]) -> Vec<f64> {
    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let a: Vec<f64> = exponents.iter().map(|e| (e - max).exp()).collect();
    let total: f64 = a.iter().sum();
    a.into_iter().map(|x| x / total).collect()
}

/// Continues `seed` through the steps of `table`.
///
/// Per step: new cases draw their three flags in order (corporate, crown,
/// dissent); citations are drawn independently from the start-of-step
/// choice probabilities; covariates are then updated. The returned history
/// contains the seed steps followed by the simulated ones.
pub fn simulate_history<R: Rng + ?Sized>(
    params: &AttractParams,
    table: &CaseTable,
    seed: &CitationHistory,
    rng: &mut R,
) -> Result<CitationHistory> {
    let mut cases = seed.cases.clone();
    let mut counts = seed.counts.clone();
    let mut states = seed.final_states();
    for step in &table.steps {
        let t = counts.len();
        for _ in 0..step.cases {
            let case = Case {
                created_step: t,
                corp: rng.random_bool(step.p_corp),
                crown: rng.random_bool(step.p_crown),
                dissent: rng.random_bool(step.p_dissent),
            };
            cases.push(case);
            states.push(CaseState::new(case));
        }
        let mut row = vec![0u32; states.len()];
        if step.cites > 0 {
            if states.is_empty() {
                return Err(Error::NoCases(t));
            }
            let exps: Vec<f64> = states.iter().map(|s| exponent(s, params)).collect();
            let probs = selection_probabilities(&exps);
            let pick =
                WeightedIndex::new(&probs).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            for _ in 0..step.cites {
                row[pick.sample(rng)] += 1;
            }
        }
        for (s, &c) in states.iter_mut().zip(&row) {
            s.update(c);
        }
        counts.push(row);
    }
    Ok(CitationHistory { cases, counts })
}
