//! Discretized functional data: the common grid, labelled trajectory sets,
//! CSV IO, preprocessing transforms and stratified resampling.

mod io;
mod preprocess;
mod split;

pub use io::{load_dataset, save_dataset, CsvSchema};
pub use preprocess::{local_linear_smooth, second_derivative, DEFAULT_SMOOTHING_BANDWIDTH};
pub use split::{stratified_folds, stratified_split, SplitPair};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Strictly increasing sample times in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    points: Vec<T>,
}

impl<T: Scalar> Grid<T> {
    pub fn new(points: Vec<T>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        for (i, &t) in points.iter().enumerate() {
            if !t.is_finite() || t < T::zero() || t > T::one() {
                return Err(Error::InvalidGrid(format!("point {i} = {t} outside [0, 1]")));
            }
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "not strictly increasing at position {}",
                i + 1
            )));
        }
        Ok(Grid { points })
    }

    /// `n` equidistant points `1/n, 2/n, ..., 1`.
    ///
    /// The origin is left out: Brownian trajectories are pinned there, so the
    /// column would be identically zero. Dyadic points such as 1/2, 5/8 and
    /// 3/4 are exact grid points whenever `n` is a multiple of 8.
    pub fn right_endpoints(n: usize) -> Result<Self> {
        let nf = T::of_usize(n);
        Self::new((1..=n).map(|i| T::of_usize(i) / nf).collect())
    }

    /// `n` equidistant points from 0 to 1 inclusive.
    pub fn linspace(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {n}")));
        }
        let step = T::one() / T::of_usize(n - 1);
        let mut points: Vec<T> = (0..n).map(|i| T::of_usize(i) * step).collect();
        points[n - 1] = T::one();
        Self::new(points)
    }

    /// Affinely maps arbitrary increasing sample times (ages, wavelengths,
    /// days, ...) onto `[0, 1]`.
    pub fn rescaled(raw: &[T]) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::InvalidGrid("need at least 2 points".into()));
        }
        let lo = raw[0];
        let span = raw[raw.len() - 1] - lo;
        if !(span > T::zero()) {
            return Err(Error::InvalidGrid("sample times do not increase".into()));
        }
        let mut points: Vec<T> = raw.iter().map(|&t| (t - lo) / span).collect();
        let last = points.len() - 1;
        points[last] = T::one();
        Self::new(points)
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, i: usize) -> T {
        self.points[i]
    }

    pub fn first(&self) -> T {
        self.points[0]
    }

    pub fn last(&self) -> T {
        self.points[self.points.len() - 1]
    }

    pub fn span(&self) -> T {
        self.last() - self.first()
    }

    /// Index of `t` if it lies on the grid (up to a few ulps).
    pub fn index_of(&self, t: T) -> Option<usize> {
        let tol = T::epsilon() * T::of(16.0);
        let pos = self.points.partition_point(|&p| p < t - tol);
        (pos < self.points.len() && (self.points[pos] - t).abs() <= tol).then_some(pos)
    }

    /// Index of the grid point closest to `t`.
    pub fn nearest_index(&self, t: T) -> usize {
        let pos = self.points.partition_point(|&p| p < t);
        if pos == 0 {
            return 0;
        }
        if pos == self.points.len() {
            return pos - 1;
        }
        if (t - self.points[pos - 1]) <= (self.points[pos] - t) {
            pos - 1
        } else {
            pos
        }
    }

    pub fn is_equidistant(&self) -> bool {
        let h = self.points[1] - self.points[0];
        let tol = T::of(1e-9) * self.span().max(T::epsilon());
        self.points
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= tol.max(T::epsilon() * T::of(64.0)))
    }

    /// Sub-grid made of the points at `indices` (must be increasing).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.points[i]).collect())
    }
}

/// `N` labelled trajectories sharing one grid.
///
/// Values are stored row-major: row `n` is trajectory `X_n` evaluated on the
/// grid. Labels are 0/1.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset<T> {
    grid: Grid<T>,
    values: Vec<T>,
    labels: Vec<u8>,
}

impl<T: Scalar> FunctionalDataset<T> {
    pub fn new(grid: Grid<T>, rows: Vec<Vec<T>>, labels: Vec<u8>) -> Result<Self> {
        let p = grid.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != p) {
            return Err(Error::Shape(format!("row {i} has {} values, grid has {p}", r.len())));
        }
        let values = rows.into_iter().flatten().collect();
        Self::from_flat(grid, values, labels)
    }

    pub fn from_flat(grid: Grid<T>, values: Vec<T>, labels: Vec<u8>) -> Result<Self> {
        let p = grid.len();
        if values.len() != labels.len() * p {
            return Err(Error::Shape(format!(
                "{} values for {} rows of length {p}",
                values.len(),
                labels.len()
            )));
        }
        if let Some((row, &v)) = labels.iter().enumerate().find(|(_, &l)| l > 1) {
            return Err(Error::NonBinaryLabel {
                row,
                value: v.to_string(),
            });
        }
        Ok(FunctionalDataset { grid, values, labels })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Row-major `N x p` values.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_points(&self) -> usize {
        self.grid.len()
    }

    pub fn row(&self, i: usize) -> &[T] {
        let p = self.n_points();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.values.chunks_exact(self.n_points())
    }

    pub fn value(&self, row: usize, col: usize) -> T {
        self.values[row * self.n_points() + col]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Column-major copy: `columns()[j][n] = X_n(t_j)`.
    pub fn columns(&self) -> Vec<Vec<T>> {
        let p = self.n_points();
        let mut cols = vec![Vec::with_capacity(self.n_rows()); p];
        for r in self.rows() {
            for (c, &v) in cols.iter_mut().zip(r) {
                c.push(v);
            }
        }
        cols
    }

    /// Labels converted to scalars, for use as a response variable.
    pub fn label_values(&self) -> Vec<T> {
        self.labels
            .iter()
            .map(|&l| if l == 1 { T::one() } else { T::zero() })
            .collect()
    }

    /// `[count of label 0, count of label 1]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    pub fn require_both_classes(&self) -> Result<()> {
        match self.class_counts() {
            [0, _] => Err(Error::MissingClass("no instance of class 0".into())),
            [_, 0] => Err(Error::MissingClass("no instance of class 1".into())),
            _ => Ok(()),
        }
    }

    /// New dataset holding the rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let p = self.n_points();
        let mut values = Vec::with_capacity(indices.len() * p);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        FunctionalDataset {
            grid: self.grid.clone(),
            values,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Keeps the first `n` grid points (truncation of the observation window).
    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n < 2 || n > self.n_points() {
            return Err(Error::InvalidParameter(format!(
                "cannot truncate {} points to {n}",
                self.n_points()
            )));
        }
        let idx: Vec<usize> = (0..n).collect();
        self.select_columns(&idx)
    }

    /// Keeps the grid points at `indices` (increasing).
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        let grid = self.grid.subset(indices)?;
        let mut values = Vec::with_capacity(self.n_rows() * indices.len());
        for r in self.rows() {
            values.extend(indices.iter().map(|&j| r[j]));
        }
        Self::from_flat(grid, values, self.labels.clone())
    }

    /// Drops trajectories that are identically zero.
    pub fn drop_zero_rows(&self) -> Self {
        let keep: Vec<usize> = (0..self.n_rows())
            .filter(|&i| self.row(i).iter().any(|v| !v.is_zero()))
            .collect();
        self.select_rows(&keep)
    }

    pub(crate) fn with_values(&self, grid: Grid<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len() * self.n_rows());
        FunctionalDataset {
            grid,
            values,
            labels: self.labels.clone(),
        }
    }

    /// Rebuilds a dataset from column-major storage on the same grid.
    pub(crate) fn with_columns(&self, columns: &[Vec<T>]) -> Self {
        let n = self.n_rows();
        let p = columns.len();
        let mut values = vec![T::zero(); n * p];
        for (j, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                values[i * p + j] = v;
            }
        }
        self.with_values(self.grid.clone(), values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_points() {
        assert!(Grid::<f64>::new(vec![0.0]).is_err());
        assert!(Grid::new(vec![0.0, 0.0]).is_err());
        assert!(Grid::new(vec![0.5, 0.2]).is_err());
        assert!(Grid::new(vec![0.0, 1.5]).is_err());
        assert!(Grid::new(vec![-0.1, 0.5]).is_err());
        assert!(Grid::new(vec![0.0, 0.3, 1.0]).is_ok());
    }

    #[test]
    fn right_endpoint_grid_hits_dyadics() {
        let g = Grid::<f64>::right_endpoints(200).unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!(g.index_of(0.5), Some(99));
        assert_eq!(g.index_of(0.625), Some(124));
        assert_eq!(g.index_of(0.75), Some(149));
        assert_eq!(g.index_of(1.0), Some(199));
        assert_eq!(g.index_of(0.0), None);
        assert!(g.is_equidistant());
    }

    #[test]
    fn non_equidistant_grid() {
        let g = Grid::rescaled(&[1.0, 1.25, 1.5, 2.0, 3.0, 18.0]).unwrap();
        assert!(!g.is_equidistant());
        assert_eq!(g.first(), 0.0);
        assert_eq!(g.last(), 1.0);
        assert_eq!(g.nearest_index(0.9), 5);
    }

    #[test]
    fn dataset_validation() {
        let g = Grid::new(vec![0.0, 0.5, 1.0]).unwrap();
        assert!(FunctionalDataset::new(g.clone(), vec![vec![1.0, 2.0]], vec![0]).is_err());
        let e = FunctionalDataset::new(g.clone(), vec![vec![1.0, 2.0, 3.0]], vec![2]);
        assert!(matches!(e, Err(Error::NonBinaryLabel { .. })));
        let d = FunctionalDataset::new(g, vec![vec![1.0, 2.0, 3.0], vec![0.0; 3]], vec![0, 1]).unwrap();
        assert_eq!(d.column(2), vec![3.0, 0.0]);
        assert_eq!(d.class_counts(), [1, 1]);
        assert_eq!(d.drop_zero_rows().n_rows(), 1);
        assert_eq!(d.truncate(2).unwrap().grid().points(), &[0.0, 0.5]);
        assert_eq!(d.with_columns(&d.columns()), d);
    }
}
