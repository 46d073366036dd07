use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::Method;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 7] = [
    "method",
    "n_train",
    "repetition",
    "error",
    "n_vars",
    "seconds",
    "selected_times",
];

/// One (method, training size, repetition) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub method: Method,
    pub n_train: usize,
    pub repetition: usize,
    /// Test error rate.
    pub error: f64,
    /// Selected variables or components (grid size for `base`).
    pub n_vars: usize,
    /// Fit plus prediction wall time (0 when timing is off).
    pub seconds: f64,
    pub selected_times: Vec<f64>,
}

/// Mean and standard deviation of the error per (method, training size).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    pub n_train: usize,
    pub repetitions: usize,
    pub mean_error: f64,
    /// Sample standard deviation (0 for a single repetition).
    pub sd_error: f64,
    pub mean_n_vars: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentResult {
    pub records: Vec<ExperimentRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidParameter(format!("unknown format '{s}' (csv, json)"))),
        }
    }
}

#[derive(Serialize)]
struct JsonResults<'a> {
    records: &'a [ExperimentRecord],
    aggregates: Vec<Aggregate>,
}

impl ExperimentResult {
    /// Groups in order of first appearance; sums run in record order.
    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut keys: Vec<(Method, usize)> = Vec::new();
        for r in &self.records {
            if !keys.contains(&(r.method, r.n_train)) {
                keys.push((r.method, r.n_train));
            }
        }
        keys.into_iter()
            .map(|(method, n_train)| {
                let group: Vec<&ExperimentRecord> = self
                    .records
                    .iter()
                    .filter(|r| r.method == method && r.n_train == n_train)
                    .collect();
                let n = group.len() as f64;
                let mean = group.iter().map(|r| r.error).sum::<f64>() / n;
                let sd = if group.len() > 1 {
                    (group.iter().map(|r| (r.error - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                Aggregate {
                    method,
                    n_train,
                    repetitions: group.len(),
                    mean_error: mean,
                    sd_error: sd,
                    mean_n_vars: group.iter().map(|r| r.n_vars as f64).sum::<f64>() / n,
                }
            })
            .collect()
    }

    pub fn aggregate(&self, method: Method, n_train: usize) -> Option<Aggregate> {
        self.aggregates()
            .into_iter()
            .find(|a| a.method == method && a.n_train == n_train)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.records {
            let times: Vec<String> = r.selected_times.iter().map(|t| t.to_string()).collect();
            w.write_record([
                r.method.name().to_string(),
                r.n_train.to_string(),
                r.repetition.to_string(),
                r.error.to_string(),
                r.n_vars.to_string(),
                r.seconds.to_string(),
                times.join(";"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let doc = JsonResults {
            records: &self.records,
            aggregates: self.aggregates(),
        };
        serde_json::to_writer_pretty(out, &doc)?;
        Ok(())
    }

    pub fn write<W: Write>(&self, out: W, format: OutputFormat) -> Result<()> {
        match format {
            OutputFormat::Csv => self.write_csv(out),
            OutputFormat::Json => self.write_json(out),
        }
    }
}

/// Writes the results to `path`.
pub fn emit_results(result: &ExperimentResult, path: impl AsRef<Path>, format: OutputFormat) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| Error::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = std::io::BufWriter::new(file);
    result.write(&mut w, format)?;
    w.flush()?;
    Ok(())
}

fn parse_field<T: FromStr>(value: &str, name: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {name} value '{value}'"),
    })
}

/// Reads records back from a results CSV.
pub fn load_results_csv(path: impl AsRef<Path>) -> Result<ExperimentResult> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rd = csv::Reader::from_reader(file);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected results header {header:?}"),
        });
    }
    let mut records = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let times = row[6]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| parse_field(s, "selected_times", line))
            .collect::<Result<_>>()?;
        records.push(ExperimentRecord {
            method: parse_field(&row[0], "method", line)?,
            n_train: parse_field(&row[1], "n_train", line)?,
            repetition: parse_field(&row[2], "repetition", line)?,
            error: parse_field(&row[3], "error", line)?,
            n_vars: parse_field(&row[4], "n_vars", line)?,
            seconds: parse_field(&row[5], "seconds", line)?,
            selected_times: times,
        });
    }
    Ok(ExperimentResult { records })
}
