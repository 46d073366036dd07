//! k-nearest neighbours, Fisher's linear discriminant and error accounting.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fdata::{stratified_folds, FunctionalDataset};
use crate::scalar::{LinalgScalar, Scalar};
use crate::selectors::ReducedData;

/// Ridge added to the pooled covariance before inversion.
pub const LDA_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub enum Classifier<T> {
    Knn { k: usize, train: ReducedData<T> },
    Lda { weights: Vec<T>, threshold: T },
}

impl<T: Scalar> Classifier<T> {
    /// Labels for the row-major `test` matrix.
    pub fn predict(&self, test: &[T]) -> Result<Vec<u8>> {
        match self {
            Classifier::Knn { k, train } => knn_classify(train, test, *k),
            Classifier::Lda { weights, threshold } => {
                let d = weights.len();
                check_test(test, d)?;
                Ok(test
                    .chunks_exact(d)
                    .map(|x| {
                        let s: T = x.iter().zip(weights).map(|(&a, &w)| a * w).sum();
                        u8::from(s > *threshold)
                    })
                    .collect())
            }
        }
    }
}

impl<T: Scalar> From<&FunctionalDataset<T>> for ReducedData<T> {
    fn from(data: &FunctionalDataset<T>) -> Self {
        ReducedData {
            features: data.values().to_vec(),
            dim: data.n_points(),
            labels: data.labels().to_vec(),
        }
    }
}

fn check_test<T>(test: &[T], dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::Shape("classifier needs at least one feature".into()));
    }
    if !test.len().is_multiple_of(dim) {
        return Err(Error::Shape(format!(
            "test matrix of {} values is not a multiple of dimension {dim}",
            test.len()
        )));
    }
    Ok(())
}

fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Training indices ordered by distance, lower index first on ties, cut at
/// `k_max`.
fn nearest<T: Scalar>(dist: &[T], k_max: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dist.len()).collect();
    let cmp = |&a: &usize, &b: &usize| {
        dist[a]
            .partial_cmp(&dist[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    };
    if k_max < idx.len() {
        idx.select_nth_unstable_by(k_max - 1, cmp);
        idx.truncate(k_max);
    }
    idx.sort_unstable_by(cmp);
    idx
}

/// Predictions for every `k = 1..=neighbours.len()`; ties in the vote go
/// to the nearest neighbour's label.
fn votes_for_all_k<'a>(neighbours: &'a [usize], labels: &'a [u8]) -> impl Iterator<Item = u8> + 'a {
    let nearest_label = labels[neighbours[0]];
    neighbours
        .iter()
        .scan(0usize, move |ones, &j| {
            *ones += labels[j] as usize;
            Some(*ones)
        })
        .enumerate()
        .map(move |(i, ones)| {
            let zeros = i + 1 - ones;
            match ones.cmp(&zeros) {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => 0,
                std::cmp::Ordering::Equal => nearest_label,
            }
        })
}

/// Majority vote among the `k` Euclidean-nearest training rows.
pub fn knn_classify<T: Scalar>(train: &ReducedData<T>, test: &[T], k: usize) -> Result<Vec<u8>> {
    check_test(test, train.dim)?;
    if k == 0 || k > train.n_rows() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside [1, {}]",
            train.n_rows()
        )));
    }
    Ok(test
        .chunks_exact(train.dim)
        .map(|x| {
            let dist: Vec<T> = (0..train.n_rows()).map(|i| squared_distance(x, train.row(i))).collect();
            let nn = nearest(&dist, k);
            votes_for_all_k(&nn, &train.labels).last().expect("k >= 1")
        })
        .collect())
}

/// Misclassification counts on `val` for `k = 1..=k_max`.
pub fn knn_error_counts<T: Scalar>(train: &ReducedData<T>, val: &ReducedData<T>, k_max: usize) -> Result<Vec<usize>> {
    Ok(knn_error_counts_by_prefix(train, val, train.dim, k_max)?
        .pop()
        .expect("at least one prefix"))
}

/// Misclassification counts on `val` when only the first `d` columns are
/// used, for every `d = 1..=d_max` and `k = 1..=k_max`: `out[d-1][k-1]`.
pub fn knn_error_counts_by_prefix<T: Scalar>(
    train: &ReducedData<T>,
    val: &ReducedData<T>,
    d_max: usize,
    k_max: usize,
) -> Result<Vec<Vec<usize>>> {
    if train.dim != val.dim {
        return Err(Error::Shape(format!(
            "train has {} columns, validation {}",
            train.dim, val.dim
        )));
    }
    if d_max == 0 || d_max > train.dim {
        return Err(Error::InvalidParameter(format!(
            "prefix length {d_max} outside [1, {}]",
            train.dim
        )));
    }
    if k_max == 0 || k_max > train.n_rows() {
        return Err(Error::InvalidParameter(format!(
            "k_max = {k_max} outside [1, {}]",
            train.n_rows()
        )));
    }
    let n = train.n_rows();
    let mut out = vec![vec![0usize; k_max]; d_max];
    let mut dist = vec![T::zero(); n];
    for v in 0..val.n_rows() {
        let x = val.row(v);
        dist.iter_mut().for_each(|d| *d = T::zero());
        for (d, counts) in out.iter_mut().enumerate() {
            for (i, acc) in dist.iter_mut().enumerate() {
                let diff = x[d] - train.row(i)[d];
                *acc += diff * diff;
            }
            let nn = nearest(&dist, k_max);
            for (c, pred) in counts.iter_mut().zip(votes_for_all_k(&nn, &train.labels)) {
                *c += usize::from(pred != val.labels[v]);
            }
        }
    }
    Ok(out)
}

/// Upper end of the `k` search range: `floor(sqrt(n_train))`, at least 1.
pub fn k_upper_bound(n_train: usize) -> usize {
    ((n_train as f64).sqrt().floor() as usize).max(1)
}

/// Index of the smallest value, lowest index on ties.
pub(crate) fn argmin_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// `k` in `[1, floor(sqrt(N))]` minimizing the stratified `folds`-fold CV
/// error (smallest `k` on ties).
pub fn select_k_cv<T: Scalar>(train: &ReducedData<T>, folds: usize, seed: u64) -> Result<usize> {
    let assignment = stratified_folds(&train.labels, folds, seed)?;
    let mut k_max = k_upper_bound(train.n_rows());
    let mut errors = vec![0usize; k_max];
    for f in 0..folds {
        let (tr, va): (Vec<usize>, Vec<usize>) = (0..train.n_rows()).partition(|&i| assignment[i] != f);
        let fold_train = train.select_rows(&tr);
        k_max = k_max.min(fold_train.n_rows());
        let counts = knn_error_counts(&fold_train, &train.select_rows(&va), k_max)?;
        for (e, c) in errors.iter_mut().zip(counts) {
            *e += c;
        }
    }
    let rates: Vec<f64> = errors[..k_max].iter().map(|&e| e as f64).collect();
    Ok(argmin_first(&rates) + 1)
}

/// Fisher discriminant: `w = (S_pooled + eps I)^-1 (mean_1 - mean_0)`,
/// threshold at the projection of the midpoint between class means.
pub fn fisher_lda_fit<T: LinalgScalar>(train: &ReducedData<T>) -> Result<Classifier<T>> {
    let d = train.dim;
    if d == 0 {
        return Err(Error::Shape("LDA needs at least one feature".into()));
    }
    let mut sums = [DVector::<T>::zeros(d), DVector::<T>::zeros(d)];
    let mut counts = [0usize; 2];
    for i in 0..train.n_rows() {
        let c = train.labels[i] as usize;
        counts[c] += 1;
        for (s, &x) in sums[c].iter_mut().zip(train.row(i)) {
            *s += x;
        }
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::MissingClass("LDA needs both classes".into()));
    }
    let means = [&sums[0] / T::of_usize(counts[0]), &sums[1] / T::of_usize(counts[1])];
    let mut scatter = DMatrix::<T>::zeros(d, d);
    for i in 0..train.n_rows() {
        let c = train.labels[i] as usize;
        let x = DVector::from_column_slice(train.row(i)) - &means[c];
        scatter += &x * x.transpose();
    }
    let dof = T::of_usize(train.n_rows().saturating_sub(2).max(1));
    let mut pooled = scatter / dof;
    for j in 0..d {
        pooled[(j, j)] += T::of(LDA_RIDGE);
    }
    let chol = pooled
        .cholesky()
        .ok_or_else(|| Error::Singular("pooled covariance not positive definite".into()))?;
    let w = chol.solve(&(&means[1] - &means[0]));
    if w.iter().any(|v| !num_traits::Float::is_finite(*v)) {
        return Err(Error::Singular("non-finite discriminant weights".into()));
    }
    let mid = (&means[0] + &means[1]) / T::of(2.0);
    let threshold = w.dot(&mid);
    Ok(Classifier::Lda {
        weights: w.iter().copied().collect(),
        threshold,
    })
}

pub fn fisher_lda_predict<T: Scalar>(model: &Classifier<T>, test: &[T]) -> Result<Vec<u8>> {
    model.predict(test)
}

/// Fraction of mismatches.
pub fn error_rate(predicted: &[u8], actual: &[u8]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            predicted.len(),
            actual.len()
        )));
    }
    if actual.is_empty() {
        return Ok(0.0);
    }
    let wrong = predicted.iter().zip(actual).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / actual.len() as f64)
}
