use std::collections::HashSet;

use rand::Rng;

use crate::{Error, Result};

/// Marginal prior of a single parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    /// Continuous uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// `offset + K` where `K` counts failures before the first success,
    /// with success probability `1 / (mean + 1)` so that `E[K] = mean`.
    ShiftedGeometric { offset: f64, mean: f64 },
    /// Uniform over the integers `lo..=hi`.
    DiscreteUniform { lo: i64, hi: i64 },
}

impl Distribution {
    /// Success probability of the geometric count, `None` for other kinds.
    pub fn geometric_p(&self) -> Option<f64> {
        match *self {
            Distribution::ShiftedGeometric { mean, .. } => Some(1.0 / (mean + 1.0)),
            _ => None,
        }
    }

    /// Inverse CDF at `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Distribution::Uniform { lo, hi } => lo + u * (hi - lo),
            Distribution::ShiftedGeometric { offset, mean } => {
                if mean == 0.0 {
                    return offset;
                }
                let p = 1.0 / (mean + 1.0);
                // P(K >= k) = (1-p)^k, so K = floor(ln(1-u) / ln(1-p)).
                let k = ((-u).ln_1p() / (-p).ln_1p()).floor();
                offset + k.max(0.0)
            }
            Distribution::DiscreteUniform { lo, hi } => {
                let span = (hi - lo + 1) as f64;
                let k = (u * span).floor().min(span - 1.0);
                lo as f64 + k
            }
        }
    }

    /// Density (probability mass for the discrete kinds) at `x`.
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Distribution::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Distribution::ShiftedGeometric { offset, mean } => {
                let k = x - offset;
                if k < 0.0 || k.fract() != 0.0 {
                    return 0.0;
                }
                if mean == 0.0 {
                    return if k == 0.0 { 1.0 } else { 0.0 };
                }
                let p = 1.0 / (mean + 1.0);
                (k * (-p).ln_1p()).exp() * p
            }
            Distribution::DiscreteUniform { lo, hi } => {
                if x.fract() == 0.0 && x >= lo as f64 && x <= hi as f64 {
                    1.0 / (hi - lo + 1) as f64
                } else {
                    0.0
                }
            }
        }
    }

    /// Default scaling bounds: the support for bounded kinds, and
    /// `[offset, 99th percentile]` for the shifted geometric.
    pub fn default_bounds(&self) -> (f64, f64) {
        match *self {
            Distribution::Uniform { lo, hi } => (lo, hi),
            Distribution::DiscreteUniform { lo, hi } => (lo as f64, hi as f64),
            Distribution::ShiftedGeometric { offset, .. } => {
                let hi = self.quantile(0.99).max(offset + 1.0);
                (offset, hi)
            }
        }
    }

    fn validate(&self, name: &str, bounds: (f64, f64)) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPrior(format!("{name}: {msg}")));
        match *self {
            Distribution::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return bad(format!("uniform({lo}, {hi}) needs finite lo < hi"));
                }
                if lo < bounds.0 || hi > bounds.1 {
                    return bad(format!("support [{lo}, {hi}] exceeds bounds {bounds:?}"));
                }
            }
            Distribution::ShiftedGeometric { offset, mean } => {
                if !(offset.is_finite() && mean.is_finite() && mean >= 0.0) {
                    return bad(format!(
                        "geometric(offset={offset}, mean={mean}) is invalid"
                    ));
                }
                if offset.fract() != 0.0 {
                    return bad(format!("geometric offset {offset} is not an integer"));
                }
            }
            Distribution::DiscreteUniform { lo, hi } => {
                if lo >= hi {
                    return bad(format!("discrete-uniform({lo}, {hi}) needs lo < hi"));
                }
                if (lo as f64) < bounds.0 || (hi as f64) > bounds.1 {
                    return bad(format!("support [{lo}, {hi}] exceeds bounds {bounds:?}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorEntry {
    pub name: String,
    pub distribution: Distribution,
    /// `(Pmin, Pmax)` used when scaling this parameter to the unit interval.
    pub bounds: (f64, f64),
}

impl PriorEntry {
    pub fn new(name: impl Into<String>, distribution: Distribution) -> Self {
        let bounds = distribution.default_bounds();
        Self {
            name: name.into(),
            distribution,
            bounds,
        }
    }

    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.bounds = (lo, hi);
        self
    }
}

/// Joint prior: independent marginals in a fixed order. The order defines
/// parameter-dimension order everywhere downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    entries: Vec<PriorEntry>,
}

impl PriorSpec {
    pub fn new(entries: Vec<PriorEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidPrior("no parameters".into()));
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::InvalidPrior(format!("duplicate name `{}`", e.name)));
            }
            let (lo, hi) = e.bounds;
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidPrior(format!(
                    "{}: bounds need Pmin < Pmax, got ({lo}, {hi})",
                    e.name
                )));
            }
            e.distribution.validate(&e.name, e.bounds)?;
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[PriorEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    /// Product of the marginal densities at `values`.
    pub fn density(&self, values: &[f64]) -> f64 {
        self.entries
            .iter()
            .zip(values)
            .map(|(e, &v)| e.distribution.density(v))
            .product()
    }

    /// Builds a [`ParameterSet`] from explicit values. Fails when the values
    /// have the wrong length or fall outside the prior support.
    pub fn parameter_set(&self, values: Vec<f64>) -> Result<ParameterSet> {
        if values.len() != self.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                self.len(),
                values.len()
            )));
        }
        let prior_density = self.density(&values);
        if !(prior_density > 0.0 && prior_density.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "values {values:?} have prior density {prior_density}"
            )));
        }
        Ok(ParameterSet {
            values,
            prior_density,
        })
    }

    /// Maps one uniform quantile per entry through the marginal inverse CDFs.
    pub fn from_quantiles(&self, quantiles: &[f64]) -> ParameterSet {
        assert_eq!(quantiles.len(), self.len());
        let values: Vec<f64> = self
            .entries
            .iter()
            .zip(quantiles)
            .map(|(e, &u)| e.distribution.quantile(u))
            .collect();
        let prior_density = self.density(&values);
        ParameterSet {
            values,
            prior_density,
        }
    }
}

/// One joint draw from a [`PriorSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub values: Vec<f64>,
    pub prior_density: f64,
}

/// Draws every parameter independently, in entry order, one uniform each.
pub fn draw_parameters<R: Rng + ?Sized>(prior: &PriorSpec, rng: &mut R) -> ParameterSet {
    let quantiles: Vec<f64> = (0..prior.len()).map(|_| rng.random::<f64>()).collect();
    prior.from_quantiles(&quantiles)
}
