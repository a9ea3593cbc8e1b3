use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use super::{Case, CaseStep, CaseTable, CitationHistory};
use crate::{Error, Result};

const CASE_TABLE_HEADER: [&str; 6] = ["period", "cases", "cites", "p_corp", "p_crown", "p_dissent"];
const CITATIONS_HEADER: [&str; 5] = ["case_id", "created_step", "corp", "crown", "dissent"];
const COUNTS_HEADER: [&str; 3] = ["case_id", "step", "count"];

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, want: &[&str], origin: &Path) -> Result<()> {
    let header = rdr.headers()?;
    if header.iter().ne(want.iter().copied()) {
        return Err(Error::format(
            origin,
            format!("expected header {}", want.join(",")),
        ));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    i: usize,
    line: usize,
    name: &str,
    origin: &Path,
) -> Result<T> {
    rec[i]
        .trim()
        .parse()
        .map_err(|_| Error::format(origin, format!("row {}: bad `{name}`", line + 1)))
}

fn flag(rec: &csv::StringRecord, i: usize, line: usize, name: &str, origin: &Path) -> Result<bool> {
    match field::<u8>(rec, i, line, name, origin)? {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(Error::format(
            origin,
            format!("row {}: `{name}` must be 0 or 1", line + 1),
        )),
    }
}

/// `period,cases,cites,p_corp,p_crown,p_dissent`, one row per step in time
/// order.
pub fn read_case_table<R: Read>(input: R, origin: &Path) -> Result<CaseTable> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &CASE_TABLE_HEADER, origin)?;
    let mut steps = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        steps.push(CaseStep {
            period: rec[0].to_string(),
            cases: field(&rec, 1, line, "cases", origin)?,
            cites: field(&rec, 2, line, "cites", origin)?,
            p_corp: field(&rec, 3, line, "p_corp", origin)?,
            p_crown: field(&rec, 4, line, "p_crown", origin)?,
            p_dissent: field(&rec, 5, line, "p_dissent", origin)?,
        });
    }
    CaseTable::new(steps).map_err(|e| Error::format(origin, e.to_string()))
}

pub fn write_case_table<W: Write>(table: &CaseTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CASE_TABLE_HEADER)?;
    for s in table.steps() {
        w.write_record([
            s.period.clone(),
            s.cases.to_string(),
            s.cites.to_string(),
            s.p_corp.to_string(),
            s.p_crown.to_string(),
            s.p_dissent.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a history from a case file (`case_id,created_step,corp,crown,dissent`)
/// and a count file (`case_id,step,count`). Absent counts are zero. Cases are
/// ordered by creation step, ties by file order. The history spans
/// `n_steps` steps, or up to the latest creation or count step when `None`.
pub fn read_history<R1: Read, R2: Read>(
    citations: R1,
    citations_origin: &Path,
    counts: R2,
    counts_origin: &Path,
    n_steps: Option<usize>,
) -> Result<CitationHistory> {
    let mut rdr = csv::Reader::from_reader(citations);
    check_header(&mut rdr, &CITATIONS_HEADER, citations_origin)?;
    let mut cases: Vec<(String, Case)> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let o = citations_origin;
        cases.push((
            rec[0].trim().to_string(),
            Case {
                created_step: field(&rec, 1, line, "created_step", o)?,
                corp: flag(&rec, 2, line, "corp", o)?,
                crown: flag(&rec, 3, line, "crown", o)?,
                dissent: flag(&rec, 4, line, "dissent", o)?,
            },
        ));
    }
    cases.sort_by_key(|c| c.1.created_step);
    let mut index = HashMap::new();
    for (i, (id, _)) in cases.iter().enumerate() {
        if index.insert(id.clone(), i).is_some() {
            return Err(Error::format(
                citations_origin,
                format!("duplicate case_id `{id}`"),
            ));
        }
    }

    let mut rdr = csv::Reader::from_reader(counts);
    check_header(&mut rdr, &COUNTS_HEADER, counts_origin)?;
    let mut entries = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let id = rec[0].trim();
        let &i = index.get(id).ok_or_else(|| {
            Error::format(
                counts_origin,
                format!("row {}: unknown case_id `{id}`", line + 1),
            )
        })?;
        let step: usize = field(&rec, 1, line, "step", counts_origin)?;
        let count: u32 = field(&rec, 2, line, "count", counts_origin)?;
        if step < cases[i].1.created_step && count > 0 {
            return Err(Error::format(
                counts_origin,
                format!("row {}: case `{id}` cited before its creation", line + 1),
            ));
        }
        entries.push((i, step, count));
    }

    let span = cases
        .iter()
        .map(|c| c.1.created_step + 1)
        .chain(entries.iter().map(|e| e.1 + 1))
        .max()
        .unwrap_or(0);
    let n_steps = match n_steps {
        Some(n) if n < span => {
            return Err(Error::format(
                counts_origin,
                format!("history spans {span} steps, more than {n}"),
            ));
        }
        Some(n) => n,
        None => span,
    };
    let cases: Vec<Case> = cases.into_iter().map(|c| c.1).collect();
    let mut table: Vec<Vec<u32>> = (0..n_steps)
        .map(|t| vec![0; cases.partition_point(|c| c.created_step <= t)])
        .collect();
    for (i, step, count) in entries {
        if step >= cases[i].created_step {
            table[step][i] += count;
        }
    }
    CitationHistory::new(cases, table)
}

/// Writes the case file and the count file, one count row for every case
/// and step from its creation on, zeros included. Case ids are indices.
pub fn write_history<W1: Write, W2: Write>(
    history: &CitationHistory,
    citations: W1,
    counts: W2,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(citations);
    w.write_record(CITATIONS_HEADER)?;
    let b = |v: bool| u8::from(v).to_string();
    for (i, c) in history.cases().iter().enumerate() {
        w.write_record([
            i.to_string(),
            c.created_step.to_string(),
            b(c.corp),
            b(c.crown),
            b(c.dissent),
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(counts);
    w.write_record(COUNTS_HEADER)?;
    for i in 0..history.n_cases() {
        for t in history.cases()[i].created_step..history.n_steps() {
            w.write_record([
                i.to_string(),
                t.to_string(),
                history.count(t, i).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
