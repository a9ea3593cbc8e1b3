use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::abckde::{GridOptions, SliceMode, Weighting, DEFAULT_HDR_LEVEL};
use crate::citesim::{
    read_case_table, read_history, CaseTable, CitationHistory, ColdPooling, BETA_PA,
    CITATION_PARAM_NAMES, CITATION_STAT_NAMES,
};
use crate::linktrace::{QueueOrder, SamplerConfig};
use crate::netgen::{
    Distribution, PopulationConfig, PriorEntry, PriorSpec, ALPHA, AVG_DEGREE, GAMMA, N_NODES, PHI,
};
use crate::sumstats::STAT_NAMES;
use crate::{Error, Result};

pub const DEFAULT_GRID_RESOLUTION: usize = 50;
pub const DEFAULT_R2_THRESHOLD: f64 = 0.5;
pub const DEFAULT_PREDICTION_LEVEL: f64 = 0.99;

const POPULATION_NAMES: [&str; 5] = [AVG_DEGREE, N_NODES, PHI, ALPHA, GAMMA];

/// Default prior for the preferential-attachment coefficient when the
/// configuration leaves it out.
pub fn default_beta_pa_prior() -> PriorEntry {
    PriorEntry::new(BETA_PA, Distribution::Uniform { lo: 0.0, hi: 2.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkTraceModel {
    pub sampler: SamplerConfig,
    pub population: PopulationConfig,
    pub save_samples: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CitationModel {
    pub table: CaseTable,
    pub seed: CitationHistory,
    pub pooling: ColdPooling,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    LinkTrace(LinkTraceModel),
    Citation(CitationModel),
}

impl Model {
    pub fn stat_names(&self) -> Vec<String> {
        let names: &[&str] = match self {
            Model::LinkTrace(_) => &STAT_NAMES,
            Model::Citation(_) => &CITATION_STAT_NAMES,
        };
        names.iter().map(|s| s.to_string()).collect()
    }
}

/// Settings for conditioning and summarising a round.
#[derive(Debug, Clone, PartialEq)]
pub struct InferConfig {
    pub conditioned: Vec<String>,
    pub grid_resolution: usize,
    pub hdr_level: f64,
    pub grid: GridOptions,
    pub weighting: Weighting,
    /// Also write the distance-weighted estimate.
    pub abc_estimate: bool,
}

impl InferConfig {
    pub fn new(conditioned: Vec<String>) -> Self {
        Self {
            conditioned,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
            hdr_level: DEFAULT_HDR_LEVEL,
            grid: GridOptions::default(),
            weighting: Weighting::PriorInverse,
            abc_estimate: false,
        }
    }
}

/// One simulation round.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub round: String,
    pub model: Model,
    pub prior: PriorSpec,
    pub n_runs: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads; the rayon default when `None`.
    pub threads: Option<usize>,
    pub infer: InferConfig,
    pub r2_threshold: f64,
    pub prediction_level: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: String,
    #[serde(default)]
    round: Option<String>,
    n_runs: usize,
    #[serde(default)]
    master_seed: u64,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    conditioned_statistics: Option<Vec<String>>,
    #[serde(default)]
    grid_resolution: Option<usize>,
    #[serde(default)]
    marginal_resolution: Option<usize>,
    #[serde(default)]
    threads: Option<usize>,
    #[serde(default)]
    hdr_level: Option<f64>,
    #[serde(default)]
    r2_threshold: Option<f64>,
    #[serde(default)]
    prediction_level: Option<f64>,
    #[serde(default)]
    slice: Option<String>,
    #[serde(default)]
    weighting: Option<String>,
    #[serde(default)]
    linktrace: Option<RawLinkTrace>,
    #[serde(default)]
    population: Option<RawPopulation>,
    #[serde(default)]
    citation: Option<RawCitation>,
    #[serde(default)]
    prior: Vec<RawPrior>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLinkTrace {
    n_samp: usize,
    pr_response: f64,
    #[serde(default)]
    order: Option<String>,
    #[serde(default)]
    save_samples: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPopulation {
    avg_degree: Option<f64>,
    n_nodes: Option<f64>,
    phi: Option<f64>,
    alpha: Option<f64>,
    gamma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCitation {
    case_table: Option<PathBuf>,
    seed_citations: Option<PathBuf>,
    seed_counts: Option<PathBuf>,
    cold_pooling: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrior {
    name: String,
    dist: String,
    lo: Option<f64>,
    hi: Option<f64>,
    offset: Option<f64>,
    mean: Option<f64>,
    bounds: Option<[f64; 2]>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn prior_entry(raw: &RawPrior) -> Result<PriorEntry> {
    let need = |v: Option<f64>, key: &str| {
        v.ok_or_else(|| {
            config_err(format!(
                "prior `{}`: `{key}` is required for {}",
                raw.name, raw.dist
            ))
        })
    };
    let integer = |v: f64, key: &str| {
        if v.fract() == 0.0 && v.abs() < 9e15 {
            Ok(v as i64)
        } else {
            Err(config_err(format!(
                "prior `{}`: `{key}` must be an integer",
                raw.name
            )))
        }
    };
    let distribution = match raw.dist.as_str() {
        "uniform" => Distribution::Uniform {
            lo: need(raw.lo, "lo")?,
            hi: need(raw.hi, "hi")?,
        },
        "shifted_geometric" => Distribution::ShiftedGeometric {
            offset: raw.offset.unwrap_or(0.0),
            mean: need(raw.mean, "mean")?,
        },
        "discrete_uniform" => Distribution::DiscreteUniform {
            lo: integer(need(raw.lo, "lo")?, "lo")?,
            hi: integer(need(raw.hi, "hi")?, "hi")?,
        },
        other => {
            return Err(config_err(format!(
                "prior `{}`: unknown dist `{other}` (uniform, shifted_geometric, discrete_uniform)",
                raw.name
            )))
        }
    };
    let entry = PriorEntry::new(raw.name.clone(), distribution);
    Ok(match raw.bounds {
        Some([lo, hi]) => entry.with_bounds(lo, hi),
        None => entry,
    })
}

fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Reads a TOML configuration. Relative paths inside it are taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        let mut entries = raw
            .prior
            .iter()
            .map(prior_entry)
            .collect::<Result<Vec<_>>>()?;

        let model = match raw.model.as_str() {
            "linktrace" => {
                let lt = raw
                    .linktrace
                    .as_ref()
                    .ok_or_else(|| config_err("model `linktrace` needs a [linktrace] section"))?;
                if raw.citation.is_some() {
                    return Err(config_err("[citation] is not valid for model `linktrace`"));
                }
                let order = match lt.order.as_deref() {
                    None | Some("fifo") => QueueOrder::Fifo,
                    Some("random_delay") => QueueOrder::RandomDelay,
                    Some(o) => {
                        return Err(config_err(format!(
                            "unknown order `{o}` (fifo, random_delay)"
                        )))
                    }
                };
                if !(0.0..=1.0).contains(&lt.pr_response) {
                    return Err(config_err(format!(
                        "pr_response {} outside [0, 1]",
                        lt.pr_response
                    )));
                }
                let pop = raw.population.as_ref();
                let population = PopulationConfig {
                    avg_degree: pop.and_then(|p| p.avg_degree),
                    n_nodes: pop.and_then(|p| p.n_nodes),
                    phi: pop.and_then(|p| p.phi),
                    alpha: pop.and_then(|p| p.alpha),
                    gamma: pop.and_then(|p| p.gamma),
                };
                let fixed = [
                    population.avg_degree,
                    population.n_nodes,
                    population.phi,
                    population.alpha,
                    population.gamma,
                ];
                for (name, value) in POPULATION_NAMES.iter().zip(fixed) {
                    if value.is_none() && !entries.iter().any(|e| e.name == *name) {
                        return Err(config_err(format!(
                            "`{name}` is neither in the prior nor in [population]"
                        )));
                    }
                }
                for e in &entries {
                    if !POPULATION_NAMES.contains(&e.name.as_str()) {
                        return Err(config_err(format!(
                            "unknown linktrace parameter `{}`",
                            e.name
                        )));
                    }
                }
                Model::LinkTrace(LinkTraceModel {
                    sampler: SamplerConfig {
                        n_samp: lt.n_samp,
                        pr_response: lt.pr_response,
                        order,
                    },
                    population,
                    save_samples: lt.save_samples,
                })
            }
            "citation" => {
                if raw.linktrace.is_some() || raw.population.is_some() {
                    return Err(config_err(
                        "[linktrace] and [population] are not valid for model `citation`",
                    ));
                }
                let c = raw.citation.unwrap_or_default();
                let table = match &c.case_table {
                    Some(p) => {
                        let p = resolve_path(base, p);
                        read_case_table(open(&p)?, &p)?
                    }
                    None => CaseTable::supreme_court(),
                };
                let seed = match (&c.seed_citations, &c.seed_counts) {
                    (Some(a), Some(b)) => {
                        let (a, b) = (resolve_path(base, a), resolve_path(base, b));
                        read_history(open(&a)?, &a, open(&b)?, &b, None)?
                    }
                    (None, None) => CitationHistory::default(),
                    _ => return Err(config_err("seed_citations and seed_counts go together")),
                };
                let pooling = match c.cold_pooling.as_deref() {
                    None | Some("pooled") => ColdPooling::Pooled,
                    Some("per_case_mean") => ColdPooling::PerCaseMean,
                    Some(o) => {
                        return Err(config_err(format!(
                            "unknown cold_pooling `{o}` (pooled, per_case_mean)"
                        )))
                    }
                };
                if !entries.iter().any(|e| e.name == BETA_PA) {
                    entries.push(default_beta_pa_prior());
                }
                for name in CITATION_PARAM_NAMES {
                    if !entries.iter().any(|e| e.name == name) {
                        return Err(config_err(format!("citation prior is missing `{name}`")));
                    }
                }
                for e in &entries {
                    if !CITATION_PARAM_NAMES.contains(&e.name.as_str()) {
                        return Err(config_err(format!(
                            "unknown citation parameter `{}`",
                            e.name
                        )));
                    }
                }
                Model::Citation(CitationModel {
                    table,
                    seed,
                    pooling,
                })
            }
            other => {
                return Err(config_err(format!(
                    "unknown model `{other}` (linktrace, citation)"
                )))
            }
        };

        let prior = PriorSpec::new(entries).map_err(|e| config_err(e.to_string()))?;
        if raw.n_runs < 2 {
            return Err(config_err(format!(
                "n_runs {} must be at least 2",
                raw.n_runs
            )));
        }
        let stat_names = model.stat_names();
        let conditioned = raw
            .conditioned_statistics
            .unwrap_or_else(|| stat_names.clone());
        if conditioned.is_empty() {
            return Err(config_err("conditioned_statistics is empty"));
        }
        for s in &conditioned {
            if !stat_names.contains(s) {
                return Err(config_err(format!("unknown statistic `{s}`")));
            }
        }
        let slice = match raw.slice.as_deref() {
            None | Some("marginalize") => SliceMode::Marginalize,
            Some("fix_at_mode") => SliceMode::FixAtMode,
            Some(o) => {
                return Err(config_err(format!(
                    "unknown slice `{o}` (marginalize, fix_at_mode)"
                )))
            }
        };
        let weighting = match raw.weighting.as_deref() {
            None | Some("prior_inverse") => Weighting::PriorInverse,
            Some("uniform") => Weighting::Uniform,
            Some(o) => {
                return Err(config_err(format!(
                    "unknown weighting `{o}` (prior_inverse, uniform)"
                )))
            }
        };
        let level = |v: Option<f64>, default: f64, key: &str| {
            let v = v.unwrap_or(default);
            if v > 0.0 && v < 1.0 {
                Ok(v)
            } else {
                Err(config_err(format!("{key} {v} outside (0, 1)")))
            }
        };
        let grid_resolution = raw.grid_resolution.unwrap_or(DEFAULT_GRID_RESOLUTION);
        if grid_resolution < 2 {
            return Err(config_err("grid_resolution must be at least 2"));
        }
        let citation = matches!(model, Model::Citation(_));
        Ok(RunConfig {
            round: raw.round.unwrap_or_else(|| "round".into()),
            n_runs: raw.n_runs,
            master_seed: raw.master_seed,
            output_dir: resolve_path(
                base,
                &raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            ),
            threads: raw.threads.filter(|&t| t > 0),
            infer: InferConfig {
                conditioned,
                grid_resolution,
                hdr_level: level(raw.hdr_level, DEFAULT_HDR_LEVEL, "hdr_level")?,
                grid: GridOptions {
                    slice,
                    marginal_resolution: raw.marginal_resolution,
                },
                weighting,
                abc_estimate: citation,
            },
            r2_threshold: raw.r2_threshold.unwrap_or(DEFAULT_R2_THRESHOLD),
            prediction_level: level(
                raw.prediction_level,
                DEFAULT_PREDICTION_LEVEL,
                "prediction_level",
            )?,
            model,
            prior,
        })
    }
}
