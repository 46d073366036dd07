use crate::classify::{knn_classify, knn_error_counts, knn_error_counts_by_prefix};
use crate::depmeasure::{relevance_curve_with, DcovMethod};
use crate::error::{Error, Result};
use crate::fdata::{stratified_folds, FunctionalDataset};
use crate::reducers::{fit_projection, select_components_cv, CvGrid, KnnPolicy, ProjectionKind, ProjectionModel};
use crate::selectors::{maxima_from_curve, reduce_to_times, rmh_select_with, ReducedData, SelectionResult};

use super::config::{ExperimentConfig, Method};

/// Hyperparameter policy shared by every pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSettings {
    pub r: f64,
    /// Ascending, deduplicated.
    pub s_grid: Vec<f64>,
    pub d_max: usize,
    pub c_max: usize,
    pub folds: usize,
    pub knn: KnnPolicy,
    pub dcov_method: DcovMethod,
}

impl From<&ExperimentConfig> for PipelineSettings {
    fn from(c: &ExperimentConfig) -> Self {
        let mut s_grid = c.s_grid.clone();
        s_grid.sort_by(f64::total_cmp);
        s_grid.dedup();
        PipelineSettings {
            r: c.r,
            s_grid,
            d_max: c.d_max,
            c_max: c.c_max,
            folds: c.folds,
            knn: c.knn_policy(),
            dcov_method: c.dcov_method,
        }
    }
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings::from(&ExperimentConfig::default())
    }
}

#[derive(Debug, Clone)]
enum FeatureMap {
    Full,
    Times(Vec<f64>),
    Projection(ProjectionModel<f64>),
}

/// A pipeline fitted on training data only.
#[derive(Debug, Clone)]
pub struct FittedMethod {
    pub method: Method,
    pub k: usize,
    /// Chosen `d` (MH), `s` (RMH) or component count (PCA/PLS).
    pub hyperparameter: Option<f64>,
    /// Mean CV error of the chosen settings.
    pub cv_error: f64,
    /// Selected time points (MH/RMH), in selection order.
    pub selected_times: Vec<f64>,
    pub n_vars: usize,
    features: FeatureMap,
    train: ReducedData<f64>,
}

impl FittedMethod {
    /// Feature representation of `data` used by the classifier.
    pub fn transform(&self, data: &FunctionalDataset<f64>) -> Result<ReducedData<f64>> {
        match &self.features {
            FeatureMap::Full => Ok(ReducedData::from(data)),
            FeatureMap::Times(times) => reduce_to_times(data, times),
            FeatureMap::Projection(model) => model.transform(data),
        }
    }

    pub fn predict(&self, data: &FunctionalDataset<f64>) -> Result<Vec<u8>> {
        let x = self.transform(data)?;
        knn_classify(&self.train, &x.features, self.k)
    }

    pub fn test_error(&self, test: &FunctionalDataset<f64>) -> Result<f64> {
        crate::classify::error_rate(&self.predict(test)?, test.labels())
    }

    /// Training features as seen by the classifier.
    pub fn training_features(&self) -> &ReducedData<f64> {
        &self.train
    }

    pub fn projection(&self) -> Option<&ProjectionModel<f64>> {
        match &self.features {
            FeatureMap::Projection(m) => Some(m),
            _ => None,
        }
    }
}

struct Folds {
    parts: Vec<(Vec<usize>, Vec<usize>)>,
    ks: Vec<usize>,
}

impl Folds {
    fn new(train: &FunctionalDataset<f64>, settings: &PipelineSettings, seed: u64) -> Result<Self> {
        let n = train.n_rows();
        if n < settings.folds {
            return Err(Error::TooFewInstances(format!(
                "{n} instances for {}-fold CV",
                settings.folds
            )));
        }
        let assignment = stratified_folds(train.labels(), settings.folds, seed)?;
        let parts: Vec<_> = (0..settings.folds)
            .map(|f| (0..n).partition::<Vec<usize>, _>(|&i| assignment[i] != f))
            .collect();
        let min_train = parts.iter().map(|(tr, _)| tr.len()).min().unwrap_or(0);
        let ks: Vec<usize> = settings
            .knn
            .candidates(n)
            .into_iter()
            .filter(|&k| k <= min_train)
            .collect();
        if ks.is_empty() {
            return Err(Error::InvalidParameter("no admissible k for cross-validation".into()));
        }
        Ok(Folds { parts, ks })
    }

    fn grid(&self, n_values: usize) -> CvGrid {
        CvGrid::new(n_values, self.ks.clone())
    }

    fn k_max(&self) -> usize {
        *self.ks.iter().max().expect("non-empty")
    }
}

fn pad_rows(mut counts: Vec<Vec<usize>>, n: usize) -> Vec<Vec<usize>> {
    let last = counts.last().cloned().expect("at least one row");
    counts.resize(n, last);
    counts
}

/// RMH selection with the global relevance maximum as fallback when the
/// threshold rejects everything.
fn rmh_times(sel: &SelectionResult<f64>, data: &FunctionalDataset<f64>, method: DcovMethod) -> Result<Vec<f64>> {
    if !sel.is_empty() {
        return Ok(sel.times.clone());
    }
    let curve = relevance_curve_with(data, method)?;
    let i = curve
        .argmax()
        .ok_or_else(|| Error::Shape("empty relevance curve".into()))?;
    Ok(vec![curve.grid.get(i)])
}

/// Fits `method` on `train`; CV folds are drawn from `cv_seed`.
pub fn fit_method(
    method: Method,
    train: &FunctionalDataset<f64>,
    settings: &PipelineSettings,
    cv_seed: u64,
) -> Result<FittedMethod> {
    train.require_both_classes()?;
    let folds = Folds::new(train, settings, cv_seed)?;
    let mut fitted = match method {
        Method::Base => {
            let mut grid = folds.grid(1);
            let full = ReducedData::from(train);
            for (tr, va) in &folds.parts {
                let counts = knn_error_counts(&full.select_rows(tr), &full.select_rows(va), folds.k_max())?;
                grid.add(&[counts], va.len());
            }
            let best = grid.best();
            FittedMethod {
                method,
                k: best.k,
                hyperparameter: None,
                cv_error: best.error,
                selected_times: Vec::new(),
                n_vars: train.n_points(),
                features: FeatureMap::Full,
                train: full,
            }
        }
        Method::Mh => {
            let mut grid = folds.grid(settings.d_max);
            for (tr, va) in &folds.parts {
                let fold_train = train.select_rows(tr);
                let curve = relevance_curve_with(&fold_train, settings.dcov_method)?;
                let sel = maxima_from_curve(&curve).truncated(settings.d_max);
                let xt = reduce_to_times(&fold_train, &sel.times)?;
                let xv = reduce_to_times(&train.select_rows(va), &sel.times)?;
                let counts = knn_error_counts_by_prefix(&xt, &xv, sel.len(), folds.k_max())?;
                grid.add(&pad_rows(counts, settings.d_max), va.len());
            }
            let best = grid.best();
            let curve = relevance_curve_with(train, settings.dcov_method)?;
            let times = maxima_from_curve(&curve).truncated(best.value).times;
            FittedMethod {
                method,
                k: best.k,
                hyperparameter: Some(times.len() as f64),
                cv_error: best.error,
                n_vars: times.len(),
                features: FeatureMap::Times(times.clone()),
                selected_times: times,
                train: ReducedData::from(train),
            }
        }
        Method::Rmh => {
            let s_min = *settings
                .s_grid
                .first()
                .ok_or_else(|| Error::InvalidParameter("s_grid is empty".into()))?;
            let mut grid = folds.grid(settings.s_grid.len());
            for (tr, va) in &folds.parts {
                let fold_train = train.select_rows(tr);
                let fold_val = train.select_rows(va);
                let sel = rmh_select_with(&fold_train, settings.r, s_min, settings.dcov_method)?;
                let mut rows = Vec::with_capacity(settings.s_grid.len());
                for &s in &settings.s_grid {
                    let times = rmh_times(&sel.with_relevance_threshold(s)?, &fold_train, settings.dcov_method)?;
                    let xt = reduce_to_times(&fold_train, &times)?;
                    let xv = reduce_to_times(&fold_val, &times)?;
                    rows.push(knn_error_counts(&xt, &xv, folds.k_max())?);
                }
                grid.add(&rows, va.len());
            }
            let best = grid.best();
            let s = settings.s_grid[best.value - 1];
            let sel = rmh_select_with(train, settings.r, s_min, settings.dcov_method)?.with_relevance_threshold(s)?;
            let times = rmh_times(&sel, train, settings.dcov_method)?;
            FittedMethod {
                method,
                k: best.k,
                hyperparameter: Some(s),
                cv_error: best.error,
                n_vars: times.len(),
                features: FeatureMap::Times(times.clone()),
                selected_times: times,
                train: ReducedData::from(train),
            }
        }
        Method::Pca | Method::Pls => {
            let kind = if method == Method::Pca {
                ProjectionKind::Pca
            } else {
                ProjectionKind::Pls
            };
            let choice = select_components_cv(train, kind, settings.folds, settings.c_max, settings.knn, cv_seed)?;
            let model = fit_projection(train, kind, choice.value)?;
            let c = model.components();
            FittedMethod {
                method,
                k: choice.k,
                hyperparameter: Some(c as f64),
                cv_error: choice.error,
                selected_times: Vec::new(),
                n_vars: c,
                features: FeatureMap::Projection(model),
                train: ReducedData::from(train),
            }
        }
    };
    fitted.train = fitted.transform(train)?;
    Ok(fitted)
}
