use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::depmeasure::DcovMethod;
use crate::error::{Error, Result};
use crate::fdata::{local_linear_smooth, second_derivative, CsvSchema, FunctionalDataset, Grid};
use crate::reducers::KnnPolicy;
use crate::synth::{SyntheticProblem, TrendSpec};

/// A dimension-reduction pipeline followed by kNN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Complete trajectories.
    Base,
    Mh,
    Rmh,
    Pca,
    Pls,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Base, Method::Mh, Method::Rmh, Method::Pca, Method::Pls];

    pub fn name(self) -> &'static str {
        match self {
            Method::Base => "base",
            Method::Mh => "mh",
            Method::Rmh => "rmh",
            Method::Pca => "pca",
            Method::Pls => "pls",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method '{s}' (base, mh, rmh, pca, pls)")))
    }
}

/// Fit-free transforms applied to every trajectory of a loaded dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessStep {
    SecondDerivative,
    /// Local linear smoothing with `smoothing_bandwidth`.
    Smooth,
    /// Keep the first `truncate_points` grid points.
    Truncate,
    DropZeroRows,
}

/// Flat experiment description; every key has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Named synthetic problem (`peak`, `peak2`, `square`, `sin`, `zero`).
    pub problem: Option<String>,
    /// CSV dataset for the real-data protocol.
    pub dataset: Option<PathBuf>,
    pub label_column: String,
    pub time_prefix: String,
    pub rescale_times: bool,
    pub preprocess: Vec<PreprocessStep>,
    pub smoothing_bandwidth: f64,
    pub truncate_points: Option<usize>,
    pub methods: Vec<Method>,
    pub n_train: Vec<usize>,
    pub n_test: usize,
    pub grid_size: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub r: f64,
    /// Candidate relevance thresholds for RMH, chosen by CV.
    pub s_grid: Vec<f64>,
    /// Largest number of MH variables considered.
    pub d_max: usize,
    /// Largest number of PCA/PLS components considered.
    pub c_max: usize,
    pub folds: usize,
    /// Fixed kNN `k`; `null` searches `[1, floor(sqrt(N_train))]` by CV.
    pub k: Option<usize>,
    pub train_fraction: f64,
    pub dcov_method: DcovMethod,
    /// Store wall times; when off every `seconds` field is 0 and emitted
    /// results are byte-identical across runs.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: None,
            dataset: None,
            label_column: "label".into(),
            time_prefix: "t_".into(),
            rescale_times: false,
            preprocess: Vec::new(),
            smoothing_bandwidth: crate::fdata::DEFAULT_SMOOTHING_BANDWIDTH,
            truncate_points: None,
            methods: Method::ALL.to_vec(),
            n_train: vec![50, 100, 200, 500, 1000],
            n_test: 1000,
            grid_size: 200,
            repetitions: 200,
            seed: 0,
            r: 0.8,
            s_grid: vec![0.025, 0.05, 0.1],
            d_max: 30,
            c_max: 30,
            folds: 10,
            k: None,
            train_fraction: 2.0 / 3.0,
            dcov_method: DcovMethod::Fast,
            record_timing: true,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Open {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn knn_policy(&self) -> KnnPolicy {
        match self.k {
            Some(k) => KnnPolicy::Fixed(k),
            None => KnnPolicy::CrossValidated,
        }
    }

    pub fn schema(&self) -> CsvSchema {
        CsvSchema {
            label_column: self.label_column.clone(),
            time_prefix: self.time_prefix.clone(),
            drop_zero_rows: false,
            rescale_times: self.rescale_times,
        }
    }

    /// Checks the settings shared by both protocols.
    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            return Err(invalid("repetitions must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(invalid("method list is empty"));
        }
        if self.folds < 2 {
            return Err(invalid("at least 2 CV folds are needed"));
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(invalid(format!("r must lie in (0, 1), got {}", self.r)));
        }
        if self.methods.contains(&Method::Rmh) {
            if self.s_grid.is_empty() {
                return Err(invalid("s_grid is empty"));
            }
            if let Some(s) = self.s_grid.iter().find(|&&s| !(s > 0.0 && s < 1.0)) {
                return Err(invalid(format!("s must lie in (0, 1), got {s}")));
            }
        }
        if self.d_max < 1 || self.c_max < 1 {
            return Err(invalid("d_max and c_max must be at least 1"));
        }
        if self.k == Some(0) {
            return Err(invalid("k must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(invalid(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if !(self.smoothing_bandwidth > 0.0) {
            return Err(invalid("smoothing_bandwidth must be positive"));
        }
        Ok(())
    }

    /// The named problem on a `grid_size`-point right-endpoint grid.
    pub fn synthetic_problem(&self) -> Result<SyntheticProblem<f64>> {
        let name = self
            .problem
            .as_deref()
            .ok_or_else(|| invalid("synthetic protocol needs a 'problem' name"))?;
        if self.grid_size < 2 {
            return Err(invalid("grid_size must be at least 2"));
        }
        SyntheticProblem::new(TrendSpec::from_name(name)?, Grid::right_endpoints(self.grid_size)?)
    }

    /// Applies the preprocessing chain in order.
    pub fn preprocess_dataset(&self, data: &FunctionalDataset<f64>) -> Result<FunctionalDataset<f64>> {
        let mut out = data.clone();
        for step in &self.preprocess {
            out = match step {
                PreprocessStep::SecondDerivative => second_derivative(&out)?,
                PreprocessStep::Smooth => local_linear_smooth(&out, self.smoothing_bandwidth)?,
                PreprocessStep::Truncate => {
                    let n = self
                        .truncate_points
                        .ok_or_else(|| invalid("'truncate' step needs truncate_points"))?;
                    out.truncate(n)?
                }
                PreprocessStep::DropZeroRows => out.drop_zero_rows(),
            };
        }
        Ok(out)
    }
}
