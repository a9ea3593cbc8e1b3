use std::io::{Read, Write};
use std::path::Path;

use crate::sumstats::StatVector;
use crate::{Error, Result};

/// Reads `statistic,value` rows; an empty value is missing.
pub fn read_observed<R: Read>(input: R, origin: &Path) -> Result<StatVector> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?;
    if header.iter().ne(["statistic", "value"]) {
        return Err(Error::format(origin, "expected header statistic,value"));
    }
    let mut names = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let name = rec[0].trim().to_string();
        if names.contains(&name) {
            return Err(Error::format(
                origin,
                format!("duplicate statistic `{name}`"),
            ));
        }
        let value = match rec[1].trim() {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|_| {
                Error::format(origin, format!("row {}: bad value `{s}`", line + 1))
            })?),
        };
        names.push(name);
        values.push(value);
    }
    Ok(StatVector::new(names, values))
}

pub fn write_observed<W: Write>(stats: &StatVector, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["statistic", "value"])?;
    for (n, v) in stats.names.iter().zip(&stats.values) {
        w.write_record([n.clone(), v.map(|x| x.to_string()).unwrap_or_default()])?;
    }
    w.flush()?;
    Ok(())
}
