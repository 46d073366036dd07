//! Self-describing CSV: one `label` column plus one `t_<time>` column per
//! grid point, one trajectory per row.
//!
//! ```text
//! label,t_0.0,t_0.5,t_1.0
//! 0,0.0,0.12,-0.3
//! 1,0.0,0.71,0.94
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::{FunctionalDataset, Grid};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Column naming convention and load-time filters.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub label_column: String,
    pub time_prefix: String,
    /// Drop trajectories that are identically zero.
    pub drop_zero_rows: bool,
    /// Map header times affinely onto `[0, 1]` instead of requiring them there.
    pub rescale_times: bool,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            label_column: "label".into(),
            time_prefix: "t_".into(),
            drop_zero_rows: false,
            rescale_times: false,
        }
    }
}

pub fn load_dataset<T: Scalar + FromStr>(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<FunctionalDataset<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));

    let header = reader.headers()?.clone();
    let label_pos = header
        .iter()
        .position(|h| h == schema.label_column)
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("no `{}` column", schema.label_column),
        })?;

    let mut raw_times = Vec::with_capacity(header.len().saturating_sub(1));
    let mut time_cols = Vec::with_capacity(header.len().saturating_sub(1));
    for (i, h) in header.iter().enumerate() {
        if i == label_pos {
            continue;
        }
        let t = h
            .strip_prefix(schema.time_prefix.as_str())
            .and_then(|s| s.parse::<T>().ok())
            .ok_or_else(|| Error::Parse {
                line: 1,
                msg: format!("header `{h}` is not `{}<time>`", schema.time_prefix),
            })?;
        raw_times.push(t);
        time_cols.push(i);
    }
    let grid = if schema.rescale_times {
        Grid::rescaled(&raw_times)?
    } else {
        Grid::new(raw_times)?
    };

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                line,
                msg: format!("{} fields, header has {}", record.len(), header.len()),
            });
        }
        let label_text = &record[label_pos];
        let label = match label_text.parse::<f64>() {
            Ok(0.0) => 0u8,
            Ok(1.0) => 1u8,
            Ok(_) => {
                return Err(Error::NonBinaryLabel {
                    row: k,
                    value: label_text.to_string(),
                })
            }
            Err(_) => {
                return Err(Error::Parse {
                    line,
                    msg: format!("non-numeric label `{label_text}`"),
                })
            }
        };
        labels.push(label);
        for &c in &time_cols {
            let cell = &record[c];
            let v = cell.parse::<T>().map_err(|_| Error::Parse {
                line,
                msg: format!("non-numeric cell `{cell}`"),
            })?;
            values.push(v);
        }
    }

    let data = FunctionalDataset::from_flat(grid, values, labels)?;
    Ok(if schema.drop_zero_rows {
        data.drop_zero_rows()
    } else {
        data
    })
}

/// Writes `data` in the default schema. Numbers use the shortest decimal
/// representation that parses back to the identical value.
pub fn save_dataset<T: Scalar>(data: &FunctionalDataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "label")?;
    for t in data.grid().points() {
        write!(w, ",t_{t:?}")?;
    }
    writeln!(w)?;
    for (row, label) in data.rows().zip(data.labels()) {
        write!(w, "{label}")?;
        for v in row {
            write!(w, ",{v:?}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
