//! `abcnet`: simulation rounds, screening and inference from the shell.
//!
//! Exit codes: 0 on success, 2 on a configuration error, 3 when a round
//! fails, 1 otherwise.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abcnet::citesim::{citation_stats, read_history, ColdPooling, CITATION_STAT_NAMES};
use abcnet::linktrace::write_long_format;
use abcnet::netgen::PopulationParams;
use abcnet::pipeline::{
    infer, observe_linktrace, read_observed, run_round, screen_and_update, with_threads,
    write_inference, write_observed, write_screening, InferConfig, Model, RunConfig,
};
use abcnet::sumstats::{read_stats_csv, ColumnSplit, StatVector, STAT_NAMES};
use abcnet::{run_rng, Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "abcnet",
    version,
    about = "Likelihood-free inference for link-traced network samples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Replace the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the configured number of runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Replace the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pooling {
    Pooled,
    PerCaseMean,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation round and write stats.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a citation-model round and write stats.csv.
    CiteSimulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Cubic screening of statistics against parameters, with prior suggestions.
    Screen {
        #[arg(long)]
        stats: PathBuf,
        #[arg(long)]
        observed: PathBuf,
        /// Round configuration; supplies the prior and thresholds.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (defaults to the directory of the stats file).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Condition the kernel density on observed statistics.
    Infer {
        #[arg(long)]
        stats: PathBuf,
        #[arg(long)]
        observed: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Round configuration; supplies the prior and inference settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Statistics to condition on (default: every observed one in the table).
        #[arg(long, value_delimiter = ',')]
        conditioned: Option<Vec<String>>,
        /// Grid points per plotted axis.
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Sample one population with fixed parameters and write its statistics.
    Observe {
        /// Linktrace configuration with every [population] value set.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute citation statistics of an observed history.
    CiteObserve {
        #[arg(long)]
        citations: PathBuf,
        #[arg(long)]
        counts: PathBuf,
        #[arg(long, value_enum, default_value = "pooled")]
        pooling: Pooling,
        /// Output file (statistic,value).
        #[arg(long)]
        out: PathBuf,
    },
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn load_config(path: &Path, overrides: Option<&Overrides>) -> Result<RunConfig> {
    let mut config = RunConfig::load(path)?;
    if let Some(o) = overrides {
        if let Some(seed) = o.seed {
            config.master_seed = seed;
        }
        if let Some(runs) = o.runs {
            if runs < 2 {
                return Err(Error::Config(format!("--runs {runs} must be at least 2")));
            }
            config.n_runs = runs;
        }
        if let Some(t) = o.threads {
            config.threads = Some(t).filter(|&t| t > 0);
        }
        if let Some(out) = &o.out {
            config.output_dir = out.clone();
        }
    }
    Ok(config)
}

fn simulate(config: &Path, overrides: &Overrides, citation: bool) -> Result<()> {
    let config = load_config(config, Some(overrides))?;
    if citation != matches!(config.model, Model::Citation(_)) {
        let want = if citation { "citation" } else { "linktrace" };
        return Err(Error::Config(format!(
            "this command needs model = \"{want}\""
        )));
    }
    let table = run_round(&config)?;
    println!(
        "{} runs written to {}",
        table.len(),
        config.output_dir.join("stats.csv").display()
    );
    Ok(())
}

const KNOWN_STATS: [&str; 14] = [
    STAT_NAMES[0],
    STAT_NAMES[1],
    STAT_NAMES[2],
    STAT_NAMES[3],
    STAT_NAMES[4],
    STAT_NAMES[5],
    STAT_NAMES[6],
    STAT_NAMES[7],
    STAT_NAMES[8],
    CITATION_STAT_NAMES[0],
    CITATION_STAT_NAMES[1],
    CITATION_STAT_NAMES[2],
    CITATION_STAT_NAMES[3],
    CITATION_STAT_NAMES[4],
];

fn read_inputs(
    stats: &Path,
    observed: &Path,
    config: Option<&RunConfig>,
) -> Result<(abcnet::abckde::SimTable, StatVector)> {
    let split = match config {
        Some(c) => ColumnSplit::Prior(&c.prior),
        None => ColumnSplit::KnownStatistics(&KNOWN_STATS),
    };
    let table = read_stats_csv(open(stats)?, stats, split)?;
    let obs = read_observed(open(observed)?, observed)?;
    Ok((table, obs))
}

fn screen(stats: &Path, observed: &Path, config: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let config = config.map(|c| load_config(c, None)).transpose()?;
    let (table, obs) = read_inputs(stats, observed, config.as_ref())?;
    let (r2, level) = config
        .as_ref()
        .map(|c| (c.r2_threshold, c.prediction_level))
        .unwrap_or((
            abcnet::pipeline::DEFAULT_R2_THRESHOLD,
            abcnet::pipeline::DEFAULT_PREDICTION_LEVEL,
        ));
    let (report, suggestions, prior) = screen_and_update(&table, &obs, r2, level)?;
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| stats.parent().unwrap_or(Path::new(".")).to_path_buf());
    write_screening(&dir, &report, &suggestions, &prior)?;
    for s in &suggestions {
        println!(
            "{}: [{}, {}] from {} (R2 {:.3})",
            s.parameter, s.lo, s.hi, s.statistic, s.r_squared
        );
    }
    println!("screening written to {}", dir.display());
    Ok(())
}

struct InferArgs<'a> {
    stats: &'a Path,
    observed: &'a Path,
    out: &'a Path,
    config: Option<&'a Path>,
    conditioned: Option<&'a [String]>,
    resolution: Option<usize>,
    threads: Option<usize>,
}

fn run_infer(a: InferArgs) -> Result<()> {
    let config = a.config.map(|c| load_config(c, None)).transpose()?;
    let (table, obs) = read_inputs(a.stats, a.observed, config.as_ref())?;
    let mut settings = match &config {
        Some(c) => c.infer.clone(),
        None => {
            let conditioned: Vec<String> = table
                .stat_names
                .iter()
                .filter(|s| obs.get(s).is_some())
                .cloned()
                .collect();
            let mut s = InferConfig::new(conditioned);
            s.abc_estimate = table
                .stat_names
                .iter()
                .all(|n| CITATION_STAT_NAMES.contains(&n.as_str()));
            s
        }
    };
    if let Some(c) = a.conditioned {
        settings.conditioned = c.to_vec();
    }
    if let Some(r) = a.resolution {
        settings.grid_resolution = r;
    }
    if settings.conditioned.is_empty() {
        return Err(Error::Config("no statistic to condition on".into()));
    }
    let threads = a.threads.or(config.as_ref().and_then(|c| c.threads));
    let output = with_threads(threads, || infer(&table, &obs, &settings))??;
    let written = write_inference(&output, a.out)?;
    for s in &output.summaries {
        println!(
            "{}: mean {:.6} mode {:.6} {}% HDR [{:.6}, {:.6}]",
            s.parameter,
            s.mean,
            s.mode,
            s.level * 100.0,
            s.hdr_lo,
            s.hdr_hi
        );
    }
    println!("{} files written to {}", written.len(), a.out.display());
    Ok(())
}

fn observe(config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let config = load_config(config, None)?;
    let Model::LinkTrace(m) = &config.model else {
        return Err(Error::Config("observe needs model = \"linktrace\"".into()));
    };
    let p = &m.population;
    let missing = |name: &str| Error::Config(format!("[population] must set `{name}`"));
    let params = PopulationParams {
        avg_degree: p.avg_degree.ok_or_else(|| missing("avg_degree"))?,
        n_nodes: p.n_nodes.ok_or_else(|| missing("n_nodes"))?.round() as usize,
        phi: p.phi.ok_or_else(|| missing("phi"))?,
        alpha: p.alpha.ok_or_else(|| missing("alpha"))?,
        gamma: p.gamma.ok_or_else(|| missing("gamma"))?,
    };
    params
        .validate()
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = run_rng(seed.unwrap_or(config.master_seed), 0);
    let (record, stats) = observe_linktrace(&params, &m.sampler, &mut rng)?;
    fs::create_dir_all(out)?;
    write_long_format(&record, create(&out.join("sample.csv"))?)?;
    write_observed(&stats, create(&out.join("observed.csv"))?)?;
    println!(
        "sample of {} nodes written to {}",
        record.len(),
        out.display()
    );
    Ok(())
}

fn cite_observe(citations: &Path, counts: &Path, pooling: Pooling, out: &Path) -> Result<()> {
    let history = read_history(open(citations)?, citations, open(counts)?, counts, None)?;
    let pooling = match pooling {
        Pooling::Pooled => ColdPooling::Pooled,
        Pooling::PerCaseMean => ColdPooling::PerCaseMean,
    };
    write_observed(&citation_stats(&history, pooling), create(out)?)?;
    println!(
        "statistics of {} cases written to {}",
        history.n_cases(),
        out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate { config, overrides } => simulate(config, overrides, false),
        Command::CiteSimulate { config, overrides } => simulate(config, overrides, true),
        Command::Screen {
            stats,
            observed,
            config,
            out,
        } => screen(stats, observed, config.as_deref(), out.as_deref()),
        Command::Infer {
            stats,
            observed,
            out,
            config,
            conditioned,
            resolution,
            threads,
        } => run_infer(InferArgs {
            stats,
            observed,
            out,
            config: config.as_deref(),
            conditioned: conditioned.as_deref(),
            resolution: *resolution,
            threads: *threads,
        }),
        Command::Observe { config, seed, out } => observe(config, *seed, out),
        Command::CiteObserve {
            citations,
            counts,
            pooling,
            out,
        } => cite_observe(citations, counts, *pooling, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::RoundFailed { .. } => 3,
                _ => 1,
            })
        }
    }
}
