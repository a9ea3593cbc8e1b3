use std::io::{Read, Write};
use std::path::Path;

use super::{NodeRow, SampleRecord};
use crate::{Error, Result};

pub const SAMPLE_HEADER: [&str; 12] = [
    "order",
    "node_id",
    "source_id",
    "pop_degree",
    "links_reported",
    "links_responding",
    "links_recruited",
    "links_redundant",
    "infected",
    "x",
    "y",
    "depth",
];

/// One string record per sampled node, in `SAMPLE_HEADER` column order.
/// Leaps have an empty `source_id`; undefined depths are empty.
pub fn to_long_format(record: &SampleRecord) -> Vec<[String; 12]> {
    record
        .rows
        .iter()
        .map(|r| {
            [
                r.order.to_string(),
                r.node_id.to_string(),
                r.source_id.map(|s| s.to_string()).unwrap_or_default(),
                r.pop_degree.to_string(),
                r.links_reported.to_string(),
                r.links_responding.to_string(),
                r.links_recruited.to_string(),
                r.links_redundant.to_string(),
                u8::from(r.infected).to_string(),
                r.x.to_string(),
                r.y.to_string(),
                r.depth.map(|d| d.to_string()).unwrap_or_default(),
            ]
        })
        .collect()
}

pub fn write_long_format<W: Write>(record: &SampleRecord, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SAMPLE_HEADER)?;
    for rec in to_long_format(record) {
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses the output of [`write_long_format`]. `origin` only labels errors.
pub fn read_long_format<R: Read>(input: R, origin: &Path) -> Result<SampleRecord> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(SAMPLE_HEADER.iter().copied()) {
        return Err(Error::format(
            origin,
            format!("unexpected header {header:?}"),
        ));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |col: &str| Error::format(origin, format!("row {}: bad `{col}`", line + 1));
        let uint =
            |i: usize| -> Result<usize> { rec[i].parse().map_err(|_| bad(SAMPLE_HEADER[i])) };
        let float = |i: usize| -> Result<f64> { rec[i].parse().map_err(|_| bad(SAMPLE_HEADER[i])) };
        let optional =
            |i: usize| -> Result<Option<&str>> { Ok(Some(&rec[i]).filter(|s| !s.is_empty())) };
        rows.push(NodeRow {
            order: uint(0)?,
            node_id: uint(1)?,
            source_id: match optional(2)? {
                Some(s) => Some(s.parse().map_err(|_| bad("source_id"))?),
                None => None,
            },
            pop_degree: uint(3)?,
            links_reported: uint(4)?,
            links_responding: uint(5)?,
            links_recruited: uint(6)?,
            links_redundant: uint(7)?,
            infected: match &rec[8] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("infected")),
            },
            x: float(9)?,
            y: float(10)?,
            depth: match optional(11)? {
                Some(s) => Some(s.parse().map_err(|_| bad("depth"))?),
                None => None,
            },
        });
    }
    Ok(SampleRecord { rows })
}
