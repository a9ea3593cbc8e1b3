//! Configuration, parallel simulation rounds, screening and inference, and
//! the files they leave behind.
//!
//! Run `i` of a round draws from [`run_rng`]`(master_seed, i)`, so every run
//! is reproducible on its own and results do not depend on thread count.

mod config;
mod observed;

pub use config::{
    default_beta_pa_prior, CitationModel, InferConfig, LinkTraceModel, Model, RunConfig,
    DEFAULT_GRID_RESOLUTION, DEFAULT_PREDICTION_LEVEL, DEFAULT_R2_THRESHOLD,
};
pub use observed::{read_observed, write_observed};

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::abckde::{
    conditional_grid, posterior_summaries, scale_points_with, write_posterior_csv, DensityGrid,
    PosteriorSummary, SimRun, SimTable,
};
use crate::citesim::{
    abc_estimate, citation_stats, simulate_history, write_abc_estimate, AbcEstimate, AttractParams,
};
use crate::linktrace::{
    link_trace_sample, node_depth, write_long_format, SampleRecord, SamplerConfig,
};
use crate::netgen::{
    draw_parameters, generate_population, Distribution, PopulationParams, PriorEntry, PriorSpec,
};
use crate::sumstats::{compute_stats, cubic_screen, CubicModel, ScreeningReport, StatVector};
use crate::{run_rng, Error, Result};

/// Share of failed runs above which a round fails.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Simulations of a round plus the runs that failed.
#[derive(Debug, Clone)]
pub struct RoundOutput {
    pub table: SimTable,
    pub failures: Vec<(u64, String)>,
    /// Samples of the linktrace model, kept when requested, by run.
    pub samples: Vec<(u64, SampleRecord)>,
}

/// Generates a population from `params` and samples it; depth is filled.
pub fn observe_linktrace(
    params: &PopulationParams,
    sampler: &SamplerConfig,
    rng: &mut crate::SimRng,
) -> Result<(SampleRecord, StatVector)> {
    let graph = generate_population(params, rng)?;
    let record = node_depth(link_trace_sample(&graph, sampler, rng)?);
    let stats = compute_stats(&record);
    Ok((record, stats))
}

fn simulate_run(config: &RunConfig, run: u64) -> Result<(SimRun, Option<SampleRecord>)> {
    let mut rng = run_rng(config.master_seed, run);
    let params = draw_parameters(&config.prior, &mut rng);
    match &config.model {
        Model::LinkTrace(m) => {
            let pop = m.population.resolve(&config.prior, &params)?;
            let (record, stats) = observe_linktrace(&pop, &m.sampler, &mut rng)?;
            let run = SimRun {
                run_id: run,
                params,
                stats: stats.values,
            };
            Ok((run, m.save_samples.then_some(record)))
        }
        Model::Citation(m) => {
            let beta = AttractParams::from_named(config.prior.names(), &params)?;
            let history = simulate_history(&beta, &m.table, &m.seed, &mut rng)?;
            let stats = citation_stats(&history, m.pooling);
            Ok((
                SimRun {
                    run_id: run,
                    params,
                    stats: stats.values,
                },
                None,
            ))
        }
    }
}

/// Executes every run of the round in parallel, keeping run order. Fails
/// with [`Error::RoundFailed`] when more than 10% of runs fail.
pub fn simulate_round(config: &RunConfig) -> Result<RoundOutput> {
    let results: Vec<Result<(SimRun, Option<SampleRecord>)>> =
        with_threads(config.threads, || {
            (0..config.n_runs as u64)
                .into_par_iter()
                .map(|i| simulate_run(config, i))
                .collect()
        })?;
    let mut table = SimTable::new(config.prior.clone(), config.model.stat_names());
    let mut failures = Vec::new();
    let mut samples = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((run, sample)) => {
                if let Some(s) = sample {
                    samples.push((run.run_id, s));
                }
                table.runs.push(run);
            }
            Err(e) => {
                log::warn!("run {i} failed: {e}");
                failures.push((i as u64, e.to_string()));
            }
        }
    }
    if failures.len() as f64 > MAX_FAILURE_FRACTION * config.n_runs as f64 {
        return Err(Error::RoundFailed {
            failed: failures.len(),
            total: config.n_runs,
        });
    }
    Ok(RoundOutput {
        table,
        failures,
        samples,
    })
}

/// [`simulate_round`], then writes `stats.csv`, `failures.csv` when runs
/// failed, and `samples/run_NNNNN.csv` when samples were kept.
pub fn run_round(config: &RunConfig) -> Result<SimTable> {
    let out = simulate_round(config)?;
    write_round(&out, &config.output_dir)?;
    Ok(out.table)
}

pub fn write_round(out: &RoundOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    crate::sumstats::write_stats_csv(&out.table, create(&dir.join("stats.csv"))?)?;
    if !out.failures.is_empty() {
        let mut w = csv::Writer::from_writer(create(&dir.join("failures.csv"))?);
        w.write_record(["run_id", "error"])?;
        for (id, msg) in &out.failures {
            w.write_record([id.to_string(), msg.clone()])?;
        }
        w.flush()?;
    }
    if !out.samples.is_empty() {
        let sdir = dir.join("samples");
        fs::create_dir_all(&sdir)?;
        for (id, rec) in &out.samples {
            write_long_format(rec, create(&sdir.join(format!("run_{id:05}.csv")))?)?;
        }
    }
    Ok(())
}

/// Suggested range for a parameter from its best-fitting statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct Suggestion {
    pub parameter: String,
    pub statistic: String,
    pub r_squared: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

/// Cubic screen plus, for each parameter whose best observed statistic
/// reaches `r2_threshold`, the prediction interval of that cubic at the
/// observed value. The suggested prior replaces those parameters with a
/// uniform over the interval; the others are unchanged.
pub fn screen_and_update(
    table: &SimTable,
    observed: &StatVector,
    r2_threshold: f64,
    level: f64,
) -> Result<(ScreeningReport, Vec<Suggestion>, PriorSpec)> {
    let report = cubic_screen(table);
    let mut suggestions = Vec::new();
    let mut entries: Vec<PriorEntry> = table.prior.entries().to_vec();
    for (p, param) in table.prior.names().enumerate() {
        let best = report
            .entries
            .iter()
            .filter(|e| e.parameter == param && observed.get(&e.statistic).is_some())
            .filter_map(|e| e.r_squared.map(|r| (e, r)))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((entry, r2)) = best else { continue };
        if r2 < r2_threshold {
            continue;
        }
        let s = table
            .stat_index(&entry.statistic)
            .expect("screened statistic");
        let (xs, ys) = crate::sumstats::paired_columns(table, p, s);
        let Some(model) = CubicModel::fit(&xs, &ys) else {
            continue;
        };
        let x = observed.get(&entry.statistic).expect("filtered above");
        let (lo, hi) = model.prediction_interval(x, level);
        suggestions.push(Suggestion {
            parameter: param.to_string(),
            statistic: entry.statistic.clone(),
            r_squared: r2,
            lo,
            hi,
            level,
        });
        if lo < hi && lo.is_finite() && hi.is_finite() {
            entries[p] = PriorEntry::new(param, Distribution::Uniform { lo, hi });
        }
    }
    let prior = PriorSpec::new(entries)?;
    Ok((report, suggestions, prior))
}

/// `parameter,statistic,R2,lo,hi,level`.
pub fn write_suggestions<W: Write>(suggestions: &[Suggestion], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["parameter", "statistic", "R2", "lo", "hi", "level"])?;
    for s in suggestions {
        w.write_record([
            s.parameter.clone(),
            s.statistic.clone(),
            s.r_squared.to_string(),
            s.lo.to_string(),
            s.hi.to_string(),
            s.level.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `[[prior]]` blocks ready to paste into the next round's configuration.
pub fn write_prior_toml<W: Write>(prior: &PriorSpec, mut out: W) -> Result<()> {
    for e in prior.entries() {
        writeln!(out, "[[prior]]\nname = \"{}\"", e.name)?;
        match e.distribution {
            Distribution::Uniform { lo, hi } => {
                writeln!(out, "dist = \"uniform\"\nlo = {lo:?}\nhi = {hi:?}")?
            }
            Distribution::ShiftedGeometric { offset, mean } => writeln!(
                out,
                "dist = \"shifted_geometric\"\noffset = {offset:?}\nmean = {mean:?}"
            )?,
            Distribution::DiscreteUniform { lo, hi } => {
                writeln!(out, "dist = \"discrete_uniform\"\nlo = {lo}\nhi = {hi}")?
            }
        }
        if e.bounds != e.distribution.default_bounds() {
            writeln!(out, "bounds = [{:?}, {:?}]", e.bounds.0, e.bounds.1)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes `screening.csv`, `suggestions.csv` and `suggested_prior.toml`.
pub fn write_screening(
    dir: &Path,
    report: &ScreeningReport,
    suggestions: &[Suggestion],
    prior: &PriorSpec,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    report.write_csv(create(&dir.join("screening.csv"))?)?;
    write_suggestions(suggestions, create(&dir.join("suggestions.csv"))?)?;
    let mut w = create(&dir.join("suggested_prior.toml"))?;
    write_prior_toml(prior, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Posterior products of a round.
#[derive(Debug, Clone)]
pub struct InferOutput {
    pub summaries: Vec<PosteriorSummary>,
    /// One grid per parameter pair, in prior order.
    pub grids: Vec<DensityGrid>,
    pub abc: Option<Vec<AbcEstimate>>,
    /// Runs dropped for a missing conditioned statistic.
    pub dropped: usize,
}

/// Builds the kernel model on the conditioned statistics and computes the
/// posterior summaries, every pairwise grid and, when configured, the
/// distance-weighted estimate.
pub fn infer(table: &SimTable, observed: &StatVector, config: &InferConfig) -> Result<InferOutput> {
    let (reduced, dropped) = table.select_statistics(&config.conditioned)?;
    if dropped > 0 {
        log::info!("dropped {dropped} runs with a missing conditioned statistic");
    }
    let model = scale_points_with(&reduced, config.weighting)?;
    let summaries = posterior_summaries(&model, observed, config.hdr_level, &config.grid)?;
    let names: Vec<&str> = table.prior.names().collect();
    let mut grids = Vec::new();
    for a in 0..names.len() {
        for b in a + 1..names.len() {
            grids.push(conditional_grid(
                &model,
                observed,
                &[names[a], names[b]],
                config.grid_resolution,
                &config.grid,
            )?);
        }
    }
    let abc = if config.abc_estimate {
        Some(abc_estimate(&reduced, observed, config.weighting)?)
    } else {
        None
    };
    Ok(InferOutput {
        summaries,
        grids,
        abc,
        dropped,
    })
}

/// Writes `posterior.csv`, `grid2d_<a>_<b>.csv` per pair and
/// `abc_estimate.csv` when present. Returns the paths written.
pub fn write_inference(out: &InferOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join("posterior.csv");
    write_posterior_csv(&out.summaries, create(&path)?)?;
    written.push(path);
    for g in &out.grids {
        let path = dir.join(format!("grid2d_{}_{}.csv", g.axes[0].name, g.axes[1].name));
        g.write_grid2d_csv(create(&path)?)?;
        written.push(path);
    }
    if let Some(abc) = &out.abc {
        let path = dir.join("abc_estimate.csv");
        write_abc_estimate(abc, create(&path)?)?;
        written.push(path);
    }
    Ok(written)
}
