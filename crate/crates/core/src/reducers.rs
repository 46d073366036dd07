//! Projection baselines: principal components and PLS1 scores.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::classify::{k_upper_bound, knn_error_counts_by_prefix};
use crate::error::{Error, Result};
use crate::fdata::{stratified_folds, FunctionalDataset};
use crate::scalar::{LinalgScalar, Scalar};
use crate::selectors::ReducedData;

/// Largest number of components considered by cross-validation.
pub const DEFAULT_MAX_COMPONENTS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionKind {
    Pca,
    Pls,
}

/// Linear projection `scores = (x - mean) * directions`.
#[derive(Debug, Clone)]
pub struct ProjectionModel<T: Scalar> {
    pub kind: ProjectionKind,
    pub mean: Vec<T>,
    /// `p x c`, one direction per column.
    pub directions: DMatrix<T>,
    /// PCA eigenvalues, descending (empty for PLS).
    pub variances: Vec<T>,
}

impl<T: LinalgScalar> ProjectionModel<T> {
    pub fn components(&self) -> usize {
        self.directions.ncols()
    }

    /// Scores of row-major trajectories (`p` values per row).
    pub fn transform_rows(&self, rows: &[T], labels: Vec<u8>) -> Result<ReducedData<T>> {
        let p = self.mean.len();
        if rows.len() != p * labels.len() {
            return Err(Error::Shape(format!(
                "{} values for {} rows of length {p}",
                rows.len(),
                labels.len()
            )));
        }
        let c = self.components();
        let mut features = Vec::with_capacity(labels.len() * c);
        for x in rows.chunks_exact(p) {
            for k in 0..c {
                let col = self.directions.column(k);
                let mut s = T::zero();
                for j in 0..p {
                    s += (x[j] - self.mean[j]) * col[j];
                }
                features.push(s);
            }
        }
        ReducedData::new(features, c, labels)
    }

    pub fn transform(&self, data: &FunctionalDataset<T>) -> Result<ReducedData<T>> {
        if data.n_points() != self.mean.len() {
            return Err(Error::Shape(format!(
                "model fitted on {} grid points, data has {}",
                self.mean.len(),
                data.n_points()
            )));
        }
        self.transform_rows(data.values(), data.labels().to_vec())
    }
}

fn check_components<T: Scalar>(train: &FunctionalDataset<T>, c: usize) -> Result<()> {
    let cap = train.n_rows().saturating_sub(1).min(train.n_points());
    if c < 1 || c > cap {
        return Err(Error::InvalidParameter(format!(
            "component count {c} outside [1, {cap}]"
        )));
    }
    Ok(())
}

fn centered<T: LinalgScalar>(train: &FunctionalDataset<T>) -> (Vec<T>, DMatrix<T>) {
    let (n, p) = (train.n_rows(), train.n_points());
    let mut x = DMatrix::from_row_slice(n, p, train.values());
    let nf = T::of_usize(n);
    let mean: Vec<T> = (0..p).map(|j| x.column(j).iter().copied().sum::<T>() / nf).collect();
    for (j, &m) in mean.iter().enumerate() {
        for v in x.column_mut(j).iter_mut() {
            *v -= m;
        }
    }
    (mean, x)
}

/// Top-`c` eigenvectors of the sample covariance, eigenvalues descending.
/// Each direction is signed so that its largest-magnitude entry is positive.
pub fn pca_fit<T: LinalgScalar>(train: &FunctionalDataset<T>, c: usize) -> Result<ProjectionModel<T>> {
    check_components(train, c)?;
    let (mean, x) = centered(train);
    let cov = (x.transpose() * &x) / T::of_usize(train.n_rows() - 1);
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let p = train.n_points();
    let mut directions = DMatrix::zeros(p, c);
    for (k, &src) in order.iter().take(c).enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        let lead = v.iter().copied().fold((T::zero(), T::zero()), |(best, signed), e| {
            if num_traits::Float::abs(e) > best {
                (num_traits::Float::abs(e), e)
            } else {
                (best, signed)
            }
        });
        if lead.1 < T::zero() {
            v = -v;
        }
        directions.set_column(k, &v);
    }
    let variances = order
        .iter()
        .take(c)
        .map(|&i| num_traits::Float::max(eig.eigenvalues[i], T::zero()))
        .collect();
    Ok(ProjectionModel {
        kind: ProjectionKind::Pca,
        mean,
        directions,
        variances,
    })
}

/// PLS1 by NIPALS on the centered 0/1 response.
///
/// Each step takes the normalized covariance `X^T y` of the deflated
/// predictors with the deflated response as weight, scores `t = X w`, and
/// deflates `X -= t p^T`, `y -= q t`. The stored directions are
/// `W (P^T W)^-1`, which map centered raw trajectories straight to the
/// scores. Fewer than `c` components are returned if the response is
/// exhausted early.
pub fn pls_fit<T: LinalgScalar>(train: &FunctionalDataset<T>, c: usize) -> Result<ProjectionModel<T>> {
    check_components(train, c)?;
    train.require_both_classes()?;
    let (mean, mut x) = centered(train);
    let labels = train.label_values();
    let nf = T::of_usize(labels.len());
    let ybar = labels.iter().copied().sum::<T>() / nf;
    let mut y = DVector::from_iterator(labels.len(), labels.iter().map(|&v| v - ybar));
    if y.iter().all(|v| v.is_zero()) {
        return Err(Error::InvalidParameter(
            "response has zero variance after centering".into(),
        ));
    }

    let p = train.n_points();
    let mut weights: Vec<DVector<T>> = Vec::with_capacity(c);
    let mut loadings: Vec<DVector<T>> = Vec::with_capacity(c);
    let mut first_norm = None;
    for _ in 0..c {
        let mut w = x.transpose() * &y;
        let norm = num_traits::Float::sqrt(w.dot(&w));
        let reference = *first_norm.get_or_insert(norm);
        if !(norm > reference * T::of(1e-10)) {
            break;
        }
        w /= norm;
        let t = &x * &w;
        let tt = t.dot(&t);
        if !(tt > T::zero()) {
            break;
        }
        let load = x.transpose() * &t / tt;
        let q = y.dot(&t) / tt;
        x -= &t * load.transpose();
        y -= &t * q;
        weights.push(w);
        loadings.push(load);
    }
    if weights.is_empty() {
        return Err(Error::InvalidParameter(
            "predictors carry no covariance with the response".into(),
        ));
    }
    let a = weights.len();
    let w = DMatrix::from_columns(&weights);
    let pl = DMatrix::from_columns(&loadings);
    let ptw = pl.transpose() * &w;
    let inv = ptw
        .try_inverse()
        .ok_or_else(|| Error::Singular("P^T W is not invertible".into()))?;
    let directions = w * inv;
    debug_assert_eq!(directions.shape(), (p, a));
    Ok(ProjectionModel {
        kind: ProjectionKind::Pls,
        mean,
        directions,
        variances: Vec::new(),
    })
}

pub fn fit_projection<T: LinalgScalar>(
    train: &FunctionalDataset<T>,
    kind: ProjectionKind,
    c: usize,
) -> Result<ProjectionModel<T>> {
    match kind {
        ProjectionKind::Pca => pca_fit(train, c),
        ProjectionKind::Pls => pls_fit(train, c),
    }
}

/// How the kNN `k` is handled while a hyperparameter is cross-validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnnPolicy {
    Fixed(usize),
    /// Searched jointly over `[1, floor(sqrt(N_train))]`.
    CrossValidated,
}

impl KnnPolicy {
    pub(crate) fn candidates(&self, n_train: usize) -> Vec<usize> {
        match *self {
            KnnPolicy::Fixed(k) => vec![k],
            KnnPolicy::CrossValidated => (1..=k_upper_bound(n_train)).collect(),
        }
    }
}

/// Outcome of a cross-validated choice of one hyperparameter and `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvChoice {
    /// Index of the chosen candidate (component count, variable count, ...).
    pub value: usize,
    pub k: usize,
    /// Mean validation error of the choice.
    pub error: f64,
}

/// Accumulates validation error counts over a `values x k` grid.
#[derive(Debug, Clone)]
pub(crate) struct CvGrid {
    ks: Vec<usize>,
    errors: Vec<Vec<usize>>,
    total: usize,
}

impl CvGrid {
    pub(crate) fn new(n_values: usize, ks: Vec<usize>) -> Self {
        CvGrid {
            errors: vec![vec![0; ks.len()]; n_values],
            ks,
            total: 0,
        }
    }

    pub(crate) fn k_max(&self) -> usize {
        *self.ks.iter().max().expect("non-empty k range")
    }

    /// `counts[v][k-1]` for `k = 1..=k_max` (extra `k` columns ignored).
    pub(crate) fn add(&mut self, counts: &[Vec<usize>], n_val: usize) {
        for (row, c) in self.errors.iter_mut().zip(counts) {
            for (e, &k) in row.iter_mut().zip(&self.ks) {
                *e += c[k - 1];
            }
        }
        self.total += n_val;
    }

    /// Smallest mean error, ties to the smallest value then smallest `k`.
    pub(crate) fn best(&self) -> CvChoice {
        let mut best = (usize::MAX, 0, 0);
        for (v, row) in self.errors.iter().enumerate() {
            for (ki, &e) in row.iter().enumerate() {
                if e < best.0 {
                    best = (e, v, ki);
                }
            }
        }
        CvChoice {
            value: best.1 + 1,
            k: self.ks[best.2],
            error: best.0 as f64 / self.total.max(1) as f64,
        }
    }
}

/// Component count in `[1, c_max]` (and `k` under
/// [`KnnPolicy::CrossValidated`]) minimizing the stratified CV error of kNN
/// on the projected data. Ties go to the smallest count.
pub fn select_components_cv<T: LinalgScalar>(
    train: &FunctionalDataset<T>,
    kind: ProjectionKind,
    folds: usize,
    c_max: usize,
    knn: KnnPolicy,
    seed: u64,
) -> Result<CvChoice> {
    let n = train.n_rows();
    if n < folds {
        return Err(Error::TooFewInstances(format!("{n} instances for {folds}-fold CV")));
    }
    let assignment = stratified_folds(train.labels(), folds, seed)?;
    let min_fold_train = (0..folds)
        .map(|f| assignment.iter().filter(|&&a| a != f).count())
        .min()
        .unwrap_or(0);
    let c_cap = c_max.min(train.n_points()).min(min_fold_train.saturating_sub(1)).max(1);
    let ks: Vec<usize> = knn
        .candidates(n)
        .into_iter()
        .filter(|&k| k >= 1 && k <= min_fold_train)
        .collect();
    if ks.is_empty() {
        return Err(Error::InvalidParameter("no admissible k for cross-validation".into()));
    }
    let mut grid = CvGrid::new(c_cap, ks);
    for f in 0..folds {
        let (tr, va): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| assignment[i] != f);
        let fold_train = train.select_rows(&tr);
        let fold_val = train.select_rows(&va);
        let model = fit_projection(&fold_train, kind, c_cap)?;
        let c_fold = model.components();
        let tr_scores = model.transform(&fold_train)?;
        let va_scores = model.transform(&fold_val)?;
        let mut counts = knn_error_counts_by_prefix(&tr_scores, &va_scores, c_fold, grid.k_max())?;
        // PLS may stop early; larger counts reuse every available component
        while counts.len() < c_cap {
            counts.push(counts[c_fold - 1].clone());
        }
        grid.add(&counts, va.len());
    }
    Ok(grid.best())
}
