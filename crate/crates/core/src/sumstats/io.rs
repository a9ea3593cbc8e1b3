use std::io::{Read, Write};
use std::path::Path;

use crate::abckde::{SimRun, SimTable};
use crate::netgen::{Distribution, PriorEntry, PriorSpec};
use crate::{Error, Result};

/// `(run_id, parameters, statistics)` as parsed from one row.
type RawRow = (u64, Vec<f64>, Vec<Option<f64>>);

/// How `read_stats_csv` tells parameter columns from statistic columns.
#[derive(Debug, Clone, Copy)]
pub enum ColumnSplit<'a> {
    /// The parameter columns are the prior's names, in order.
    Prior(&'a PriorSpec),
    /// The statistic block starts at the first column whose name is in the
    /// list. Parameters get uniform priors spanning their observed range.
    KnownStatistics(&'a [&'a str]),
}

fn fmt(v: f64) -> String {
    v.to_string()
}

/// Writes `run_id`, the parameters and the statistics, one row per run.
/// Missing statistics are empty fields.
pub fn write_stats_csv<W: Write>(table: &SimTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["run_id".to_string()];
    header.extend(table.prior.names().map(str::to_string));
    header.extend(table.stat_names.iter().cloned());
    w.write_record(&header)?;
    for run in &table.runs {
        let mut rec = vec![run.run_id.to_string()];
        rec.extend(run.params.values.iter().map(|&v| fmt(v)));
        rec.extend(run.stats.iter().map(|v| v.map(fmt).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_stats_csv`]. `origin` only labels errors.
pub fn read_stats_csv<R: Read>(input: R, origin: &Path, split: ColumnSplit) -> Result<SimTable> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("run_id") {
        return Err(Error::format(origin, "first column must be `run_id`"));
    }
    let columns = &header[1..];
    let np = match split {
        ColumnSplit::Prior(prior) => {
            let names: Vec<&str> = prior.names().collect();
            if columns.len() < names.len() || columns[..names.len()].iter().ne(names.iter()) {
                return Err(Error::format(
                    origin,
                    format!("parameter columns do not match prior {names:?}"),
                ));
            }
            names.len()
        }
        ColumnSplit::KnownStatistics(known) => columns
            .iter()
            .position(|c| known.contains(&c.as_str()))
            .ok_or_else(|| Error::format(origin, "no known statistic column"))?,
    };
    let stat_names = columns[np..].to_vec();

    let mut raw: Vec<RawRow> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |col: &str| Error::format(origin, format!("row {}: bad `{col}`", line + 1));
        let run_id = rec[0].parse().map_err(|_| bad("run_id"))?;
        let params = (0..np)
            .map(|j| rec[1 + j].parse::<f64>().map_err(|_| bad(&columns[j])))
            .collect::<Result<Vec<_>>>()?;
        let stats = (np..columns.len())
            .map(|j| match &rec[1 + j] {
                "" => Ok(None),
                s => s.parse::<f64>().map(Some).map_err(|_| bad(&columns[j])),
            })
            .collect::<Result<Vec<_>>>()?;
        raw.push((run_id, params, stats));
    }

    let prior = match split {
        ColumnSplit::Prior(prior) => prior.clone(),
        ColumnSplit::KnownStatistics(_) => range_prior(&columns[..np], &raw)?,
    };
    let runs = raw
        .into_iter()
        .map(|(run_id, params, stats)| {
            Ok(SimRun {
                run_id,
                params: prior.parameter_set(params)?,
                stats,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimTable {
        prior,
        stat_names,
        runs,
    })
}

/// Uniform prior over each column's observed range, widened to unit width
/// around a constant column.
fn range_prior(names: &[String], raw: &[RawRow]) -> Result<PriorSpec> {
    let entries = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let (lo, hi) = raw
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r.1[j]), hi.max(r.1[j]))
                });
            let (lo, hi) = match (lo.is_finite(), lo < hi) {
                (false, _) => (0.0, 1.0),
                (true, false) => (lo - 0.5, lo + 0.5),
                (true, true) => (lo, hi),
            };
            PriorEntry::new(name, Distribution::Uniform { lo, hi })
        })
        .collect();
    PriorSpec::new(entries)
}
