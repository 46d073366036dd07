//! Squared distance covariance / correlation between univariate samples and
//! the relevance curve `t -> R^2(X(t), Y)`.
//!
//! The estimator is the plug-in V-statistic: with `a_ij = |x_i - x_j|`,
//! `b_ij = |y_i - y_j|` and `A`, `B` their double-centered versions,
//!
//! ```text
//! V^2_n(x, y) = (1/n^2) sum_ij A_ij B_ij
//! ```
//!
//! which is non-negative by construction. Two evaluation routes exist:
//!
//! * [`DcovMethod::Naive`] materializes both `n x n` centered matrices.
//! * [`DcovMethod::Fast`] expands the double sum into
//!   `S1 + S2 - 2 S3` (pair term, product of grand means, row-sum term) and
//!   evaluates each piece after sorting, in `O(n log n)`. The pair term
//!   `sum_ij a_ij b_ij` is accumulated with a Fenwick tree over the ranks of
//!   `y` while sweeping `x` in increasing order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdata::{FunctionalDataset, Grid};
use crate::scalar::Scalar;

/// Evaluation route for the distance covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DcovMethod {
    /// `O(n^2)` double-centered distance matrices.
    #[default]
    Naive,
    /// `O(n log n)` sorting based evaluation.
    Fast,
}

/// `R^2(X(t_j), Y)` for every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceCurve<T> {
    pub grid: Grid<T>,
    pub values: Vec<T>,
}

impl<T: Scalar> RelevanceCurve<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the largest value (lowest index on ties).
    pub fn argmax(&self) -> Option<usize> {
        argmax(&self.values)
    }
}

pub(crate) fn argmax<T: Scalar>(v: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in v.iter().enumerate() {
        match best {
            Some(b) if !(x > v[b]) => {}
            _ => best = Some(i),
        }
    }
    best
}

fn check_pair<T>(x: &[T], y: &[T]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "samples have different lengths ({} and {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::TooFewInstances(format!(
            "distance covariance needs n >= 2, got {}",
            x.len()
        )));
    }
    Ok(())
}

fn is_constant<T: Scalar>(x: &[T]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// Squared distance covariance (V-statistic) via the naive route.
pub fn dcov_sq<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    dcov_sq_with(x, y, DcovMethod::Naive)
}

pub fn dcov_sq_with<T: Scalar>(x: &[T], y: &[T], method: DcovMethod) -> Result<T> {
    check_pair(x, y)?;
    let px = Prepared::new(x, method);
    let py = Prepared::new(y, method);
    px.dcov(&py)
}

/// Squared distance correlation via the naive route; 0 when either sample
/// is constant.
pub fn dcor_sq<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    dcor_sq_with(x, y, DcovMethod::Naive)
}

pub fn dcor_sq_with<T: Scalar>(x: &[T], y: &[T], method: DcovMethod) -> Result<T> {
    check_pair(x, y)?;
    let px = Prepared::new(x, method);
    let py = Prepared::new(y, method);
    let vx = px.variance()?;
    let vy = py.variance()?;
    correlation(px.dcov(&py)?, vx, vy)
}

fn correlation<T: Scalar>(vxy: T, vx: T, vy: T) -> Result<T> {
    let denom = vx * vy;
    if !(denom > T::zero()) {
        return Ok(T::zero());
    }
    Ok((vxy / denom.sqrt()).max(T::zero()).min(T::one()))
}

/// Accepts rounding residue below zero and rejects anything larger.
fn clamp_residue<T: Scalar>(v: T, magnitude: T) -> Result<T> {
    if v >= T::zero() {
        return Ok(v);
    }
    let tol = T::of(1e-12).max(T::epsilon() * T::of(64.0) * magnitude);
    if v >= -tol {
        Ok(T::zero())
    } else {
        Err(Error::Numerical(format!(
            "distance covariance estimate {v:e} is negative beyond rounding"
        )))
    }
}

/// A sample prepared for repeated distance covariance evaluations against
/// other samples of the same length.
#[derive(Debug, Clone)]
pub enum Prepared<T> {
    Naive(CenteredDistances<T>),
    Fast(SortedSample<T>),
    /// All observations equal: every distance covariance is exactly zero.
    Constant(usize),
}

impl<T: Scalar> Prepared<T> {
    pub fn new(x: &[T], method: DcovMethod) -> Self {
        if is_constant(x) {
            return Prepared::Constant(x.len());
        }
        match method {
            DcovMethod::Naive => Prepared::Naive(CenteredDistances::new(x)),
            DcovMethod::Fast => Prepared::Fast(SortedSample::new(x)),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Prepared::Naive(c) => c.n,
            Prepared::Fast(s) => s.values.len(),
            Prepared::Constant(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dcov(&self, other: &Self) -> Result<T> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "samples have different lengths ({} and {})",
                self.len(),
                other.len()
            )));
        }
        match (self, other) {
            (Prepared::Constant(_), _) | (_, Prepared::Constant(_)) => Ok(T::zero()),
            (Prepared::Naive(a), Prepared::Naive(b)) => a.dcov(b),
            (Prepared::Fast(a), Prepared::Fast(b)) => a.dcov(b),
            _ => Err(Error::InvalidParameter(
                "cannot mix naive and fast prepared samples".into(),
            )),
        }
    }

    /// `V^2(x, x)`.
    pub fn variance(&self) -> Result<T> {
        match self {
            Prepared::Constant(_) => Ok(T::zero()),
            Prepared::Naive(a) => a.dcov(a),
            Prepared::Fast(a) => a.variance(),
        }
    }
}

/// Double-centered matrix of pairwise absolute differences.
#[derive(Debug, Clone)]
pub struct CenteredDistances<T> {
    n: usize,
    centered: Vec<T>,
}

impl<T: Scalar> CenteredDistances<T> {
    pub fn new(x: &[T]) -> Self {
        let n = x.len();
        let nf = T::of_usize(n);
        let mut m = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = (x[i] - x[j]).abs();
            }
        }
        // symmetric, so row means double as column means
        let row_means: Vec<T> = m.chunks_exact(n).map(|r| r.iter().copied().sum::<T>() / nf).collect();
        let grand = row_means.iter().copied().sum::<T>() / nf;
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = m[i * n + j] - row_means[i] - row_means[j] + grand;
            }
        }
        CenteredDistances { n, centered: m }
    }

    pub fn dcov(&self, other: &Self) -> Result<T> {
        let nf = T::of_usize(self.n);
        let (mut sum, mut mag) = (T::zero(), T::zero());
        for (&a, &b) in self.centered.iter().zip(&other.centered) {
            let p = a * b;
            sum += p;
            mag += p.abs();
        }
        clamp_residue(sum / (nf * nf), mag / (nf * nf))
    }
}

/// Sorted view of a sample with the per-observation distance sums needed by
/// the `O(n log n)` route.
#[derive(Debug, Clone)]
pub struct SortedSample<T> {
    /// Observations shifted to zero mean.
    values: Vec<T>,
    /// Indices in increasing order of value.
    order: Vec<usize>,
    /// Dense rank of each observation (equal values share a rank).
    rank: Vec<usize>,
    n_ranks: usize,
    /// `sum_j |x_i - x_j|` for each `i`.
    row_sums: Vec<T>,
    total: T,
}

impl<T: Scalar> SortedSample<T> {
    pub fn new(x: &[T]) -> Self {
        let n = x.len();
        let mean = x.iter().copied().sum::<T>() / T::of_usize(n);
        let values: Vec<T> = x.iter().map(|&v| v - mean).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("NaN in sample"));

        let mut rank = vec![0; n];
        let mut r = 0;
        for k in 0..n {
            if k > 0 && values[order[k]] != values[order[k - 1]] {
                r += 1;
            }
            rank[order[k]] = r;
        }

        let sorted: Vec<T> = order.iter().map(|&i| values[i]).collect();
        let all: T = sorted.iter().copied().sum();
        let mut row_sums = vec![T::zero(); n];
        let mut below = T::zero();
        for (k, &v) in sorted.iter().enumerate() {
            let above = all - below - v;
            let kf = T::of_usize(k);
            let rest = T::of_usize(n - k - 1);
            row_sums[order[k]] = (kf * v - below) + (above - rest * v);
            below += v;
        }
        let total = row_sums.iter().copied().sum();
        SortedSample {
            values,
            order,
            rank,
            n_ranks: r + 1,
            row_sums,
            total,
        }
    }

    fn combine(&self, other: &Self, pair_sum: T) -> Result<T> {
        let nf = T::of_usize(self.values.len());
        let n2 = nf * nf;
        let s1 = pair_sum / n2;
        let s2 = (self.total / n2) * (other.total / n2);
        let s3 = self
            .row_sums
            .iter()
            .zip(&other.row_sums)
            .map(|(&a, &b)| a * b)
            .sum::<T>()
            / (n2 * nf);
        let two = T::of(2.0);
        clamp_residue(s1 + s2 - two * s3, s1.abs() + s2.abs() + two * s3.abs())
    }

    fn variance(&self) -> Result<T> {
        // sum_ij (x_i - x_j)^2 = 2 n sum x_i^2 - 2 (sum x_i)^2
        let nf = T::of_usize(self.values.len());
        let s: T = self.values.iter().copied().sum();
        let ss: T = self.values.iter().map(|&v| v * v).sum();
        let two = T::of(2.0);
        self.combine(self, two * nf * ss - two * s * s)
    }

    fn dcov(&self, other: &Self) -> Result<T> {
        let pair_sum = T::of(2.0) * self.pair_sum(other);
        self.combine(other, pair_sum)
    }

    /// `sum_{i<j} |x_i - x_j| |y_i - y_j|`.
    ///
    /// Sweeping `x` upward, every earlier `j` has `x_j <= x_i`, so the term
    /// is `(x_i - x_j)(y_i - y_j)` with sign `+` when `y_j < y_i` and `-`
    /// otherwise. The Fenwick tree holds `(count, sum x, sum y, sum xy)` of
    /// the processed points keyed by y-rank.
    fn pair_sum(&self, y: &Self) -> T {
        let x = self;
        let mut tree = Fenwick::new(y.n_ranks);
        let mut all = [T::zero(); 4];
        let mut acc = T::zero();
        for &i in &x.order {
            let (xi, yi) = (x.values[i], y.values[i]);
            let below = tree.prefix(y.rank[i]);
            let above = [
                all[0] - below[0],
                all[1] - below[1],
                all[2] - below[2],
                all[3] - below[3],
            ];
            let term = |s: [T; 4]| s[0] * xi * yi - xi * s[2] - yi * s[1] + s[3];
            acc += term(below) - term(above);
            let entry = [T::one(), xi, yi, xi * yi];
            tree.add(y.rank[i], entry);
            for (a, e) in all.iter_mut().zip(entry) {
                *a += e;
            }
        }
        acc
    }
}

struct Fenwick<T> {
    tree: Vec<[T; 4]>,
}

impl<T: Scalar> Fenwick<T> {
    fn new(n: usize) -> Self {
        Fenwick {
            tree: vec![[T::zero(); 4]; n + 1],
        }
    }

    fn add(&mut self, rank: usize, v: [T; 4]) {
        let mut i = rank + 1;
        while i < self.tree.len() {
            for (a, b) in self.tree[i].iter_mut().zip(v) {
                *a += b;
            }
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over ranks strictly below `rank`.
    fn prefix(&self, rank: usize) -> [T; 4] {
        let mut out = [T::zero(); 4];
        let mut i = rank;
        while i > 0 {
            for (a, b) in out.iter_mut().zip(self.tree[i]) {
                *a += b;
            }
            i -= i & i.wrapping_neg();
        }
        out
    }
}

/// Relevance of arbitrary columns with respect to a fixed label vector.
///
/// The label side (centered distances or sorted ranks, and `V^2(Y, Y)`) is
/// prepared once and reused for every column.
#[derive(Debug, Clone)]
pub struct LabelRelevance<T> {
    method: DcovMethod,
    labels: Prepared<T>,
    label_variance: T,
}

impl<T: Scalar> LabelRelevance<T> {
    pub fn new(labels: &[u8], method: DcovMethod) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::TooFewInstances(format!(
                "relevance needs n >= 2, got {}",
                labels.len()
            )));
        }
        let y: Vec<T> = labels.iter().map(|&l| T::of_usize(l as usize)).collect();
        let prepared = Prepared::new(&y, method);
        let label_variance = prepared.variance()?;
        Ok(LabelRelevance {
            method,
            labels: prepared,
            label_variance,
        })
    }

    pub fn method(&self) -> DcovMethod {
        self.method
    }

    /// `R^2(x, Y)`.
    pub fn relevance(&self, x: &[T]) -> Result<T> {
        if matches!(self.labels, Prepared::Constant(_)) {
            if x.len() != self.labels.len() {
                return Err(Error::Shape("column and labels differ in length".into()));
            }
            return Ok(T::zero());
        }
        let px = Prepared::new(x, self.method);
        let vxy = px.dcov(&self.labels)?;
        correlation(vxy, px.variance()?, self.label_variance)
    }

    /// Relevance of `columns[range]`, evaluated in parallel, in column order.
    pub fn relevance_of_columns(&self, columns: &[Vec<T>], range: std::ops::Range<usize>) -> Result<Vec<T>> {
        columns[range].par_iter().map(|c| self.relevance(c)).collect()
    }
}

/// `R^2(X(t_j), Y)` over the whole grid using the naive estimator.
pub fn relevance_curve<T: Scalar>(data: &FunctionalDataset<T>) -> Result<RelevanceCurve<T>> {
    relevance_curve_with(data, DcovMethod::Naive)
}

pub fn relevance_curve_with<T: Scalar>(data: &FunctionalDataset<T>, method: DcovMethod) -> Result<RelevanceCurve<T>> {
    let rel = LabelRelevance::new(data.labels(), method)?;
    let columns = data.columns();
    let values = rel.relevance_of_columns(&columns, 0..columns.len())?;
    Ok(RelevanceCurve {
        grid: data.grid().clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: `S1 + S2 - 2 S3` by brute-force triple sums.
    fn oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let a = |i: usize, j: usize| (x[i] - x[j]).abs();
        let b = |i: usize, j: usize| (y[i] - y[j]).abs();
        let (mut s1, mut sa, mut sb, mut s3) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                s1 += a(i, j) * b(i, j);
                sa += a(i, j);
                sb += b(i, j);
                for k in 0..n {
                    s3 += a(i, j) * b(i, k);
                }
            }
        }
        let nf = n as f64;
        s1 / (nf * nf) + sa * sb / nf.powi(4) - 2.0 * s3 / nf.powi(3)
    }

    fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect()
    }

    #[test]
    fn hand_example() {
        let v: f64 = dcov_sq(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        assert!((oracle(&[0.0, 1.0], &[0.0, 1.0]) - 0.25).abs() < 1e-15);
        let f: f64 = dcov_sq_with(&[0.0, 1.0], &[0.0, 1.0], DcovMethod::Fast).unwrap();
        assert!((f - 0.25).abs() < 1e-15);
    }

    #[test]
    fn constant_sample() {
        let x = [0.1; 7];
        let y = [1.0, 3.0, 2.0, 0.0, 5.0, 1.0, 1.5];
        for m in [DcovMethod::Naive, DcovMethod::Fast] {
            assert_eq!(dcov_sq_with(&x, &y, m).unwrap(), 0.0);
            assert_eq!(dcor_sq_with(&x, &y, m).unwrap(), 0.0);
            assert_eq!(dcor_sq_with(&y, &x, m).unwrap(), 0.0);
        }
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 3, 5, 17, 50] {
            let x = random(&mut rng, n);
            let mut y = random(&mut rng, n);
            y[0] = y[n - 1]; // exercise ties
            let want = oracle(&x, &y);
            assert!((dcov_sq(&x, &y).unwrap() - want).abs() <= 1e-12);
            assert!((dcov_sq_with(&x, &y, DcovMethod::Fast).unwrap() - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn self_correlation_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random(&mut rng, 30);
        for m in [DcovMethod::Naive, DcovMethod::Fast] {
            assert!((dcor_sq_with(&x, &x, m).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(dcov_sq(&[1.0, 2.0], &[1.0]), Err(Error::Shape(_))));
        assert!(matches!(dcov_sq(&[1.0], &[1.0]), Err(Error::TooFewInstances(_))));
        assert!(clamp_residue(-1e-13, 0.0).unwrap() == 0.0);
        assert!(clamp_residue(-1e-6, 1.0).is_err());
    }

    #[test]
    fn relevance_edge_cases() {
        let g = Grid::linspace(3).unwrap();
        let rows = vec![
            vec![0.0, 0.3, 0.0],
            vec![1.0, 0.1, 0.5],
            vec![0.0, 0.7, 0.2],
            vec![1.0, 0.2, 0.9],
        ];
        let d = FunctionalDataset::new(g.clone(), rows.clone(), vec![0, 1, 0, 1]).unwrap();
        for m in [DcovMethod::Naive, DcovMethod::Fast] {
            let c = relevance_curve_with::<f64>(&d, m).unwrap();
            assert!((c.values[0] - 1.0).abs() < 1e-12);
            assert!(c.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert_eq!(c.argmax(), Some(0));
        }
        let same = FunctionalDataset::new(g, rows, vec![1; 4]).unwrap();
        assert!(relevance_curve(&same).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn works_in_single_precision() {
        let x: Vec<f32> = vec![0.0, 1.0, 3.0, 2.5, -1.0];
        let y: Vec<f32> = vec![1.0, 0.0, 2.0, 2.0, -0.5];
        let n = dcor_sq(&x, &y).unwrap();
        let f = dcor_sq_with(&x, &y, DcovMethod::Fast).unwrap();
        assert!((n - f).abs() < 1e-5);
        assert!(n > 0.0 && n <= 1.0);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.1, 0.5, 0.5, 0.2]), Some(1));
        assert_eq!(argmax::<f64>(&[]), None);
    }
}
