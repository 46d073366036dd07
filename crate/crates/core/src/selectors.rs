//! Maxima hunting (MH) and recursive maxima hunting (RMH).
//!
//! MH keeps the highest local maxima of the relevance curve. RMH takes the
//! global maximum of the current interval, accepts it if its relevance
//! exceeds `s`, removes its information with a conditional-expectation
//! correction, excludes the neighbours whose squared distance correlation
//! with it exceeds `r`, and recurses on what is left on each side (left
//! first).
//!
//! The redundancy scan uses the columns as they were *before* the
//! correction at the selected point. After the correction the selected
//! column is identically zero and every neighbour would look independent of
//! it.

use serde::{Deserialize, Serialize};

use crate::correction::{correct_columns, IntervalNode};
use crate::depmeasure::{argmax, relevance_curve_with, DcovMethod, LabelRelevance, Prepared, RelevanceCurve};
use crate::error::{Error, Result};
use crate::fdata::{FunctionalDataset, Grid};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    Mh,
    Rmh,
}

/// Selected grid points in selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult<T> {
    pub method: SelectionMethod,
    pub times: Vec<T>,
    pub indices: Vec<usize>,
    /// `R^2(X(t), Y)` at selection time (on corrected data for RMH).
    pub relevances: Vec<T>,
    /// For RMH, the selection whose correction spawned the interval this
    /// one was found in (`None` for the root).
    pub parents: Vec<Option<usize>>,
    /// Redundancy threshold (RMH).
    pub r: Option<T>,
    /// Relevance threshold (RMH).
    pub s: Option<T>,
}

impl<T: Scalar> SelectionResult<T> {
    fn empty(method: SelectionMethod, r: Option<T>, s: Option<T>) -> Self {
        SelectionResult {
            method,
            times: Vec::new(),
            indices: Vec::new(),
            relevances: Vec::new(),
            parents: Vec::new(),
            r,
            s,
        }
    }

    fn push(&mut self, grid: &Grid<T>, index: usize, relevance: T, parent: Option<usize>) -> usize {
        self.times.push(grid.get(index));
        self.indices.push(index);
        self.relevances.push(relevance);
        self.parents.push(parent);
        self.times.len() - 1
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// First `d` selections (MH ranking order).
    pub fn truncated(&self, d: usize) -> Self {
        let d = d.min(self.len());
        SelectionResult {
            method: self.method,
            times: self.times[..d].to_vec(),
            indices: self.indices[..d].to_vec(),
            relevances: self.relevances[..d].to_vec(),
            parents: self.parents[..d].to_vec(),
            r: self.r,
            s: self.s,
        }
    }

    /// The RMH selection a stricter relevance threshold `s_new >= s` would
    /// have produced on the same data.
    ///
    /// Raising `s` only stops the recursion earlier, so the result is the
    /// set of selections whose whole ancestor chain clears `s_new`.
    pub fn with_relevance_threshold(&self, s_new: T) -> Result<Self> {
        if self.method != SelectionMethod::Rmh {
            return Err(Error::InvalidParameter(
                "only RMH selections can be re-thresholded".into(),
            ));
        }
        if self.s.is_some_and(|s| s_new < s) {
            return Err(Error::InvalidParameter(format!(
                "cannot lower the relevance threshold below the fitted value ({s_new})"
            )));
        }
        let mut keep = vec![false; self.len()];
        let mut remap = vec![None; self.len()];
        let mut out = Self::empty(self.method, self.r, Some(s_new));
        for i in 0..self.len() {
            keep[i] = self.relevances[i] > s_new && self.parents[i].is_none_or(|p| keep[p]);
            if keep[i] {
                remap[i] = Some(out.len());
                out.times.push(self.times[i]);
                out.indices.push(self.indices[i]);
                out.relevances.push(self.relevances[i]);
                out.parents.push(self.parents[i].and_then(|p| remap[p]));
            }
        }
        Ok(out)
    }

    pub fn to_record(&self) -> SelectionRecord {
        SelectionRecord {
            method: self.method,
            r: self.r.map(Scalar::to_f64_lossy),
            s: self.s.map(Scalar::to_f64_lossy),
            times: self.times.iter().map(|t| t.to_f64_lossy()).collect(),
            relevances: self.relevances.iter().map(|t| t.to_f64_lossy()).collect(),
        }
    }
}

/// JSON form of a selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub method: SelectionMethod,
    pub r: Option<f64>,
    pub s: Option<f64>,
    pub times: Vec<f64>,
    pub relevances: Vec<f64>,
}

/// Indices `j` with `values[j]` at least both neighbours, highest first
/// (lower index on ties).
///
/// A run of equal values contributes its first index only. Endpoints only
/// compare with their single neighbour.
pub fn find_local_maxima<T: Scalar>(curve: &RelevanceCurve<T>) -> Vec<usize> {
    local_maxima(&curve.values)
}

pub(crate) fn local_maxima<T: Scalar>(v: &[T]) -> Vec<usize> {
    let n = v.len();
    let mut out = Vec::new();
    let mut a = 0;
    while a < n {
        let mut b = a;
        while b + 1 < n && v[b + 1] == v[a] {
            b += 1;
        }
        let left_ok = a == 0 || v[a - 1] < v[a];
        let right_ok = b > a || b == n - 1 || v[b + 1] < v[b];
        if left_ok && right_ok {
            out.push(a);
        }
        a = b + 1;
    }
    out.sort_by(|&i, &j| {
        v[j].partial_cmp(&v[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    out
}

/// The `d` most relevant local maxima (all of them if there are fewer).
pub fn maxima_hunting_select<T: Scalar>(data: &FunctionalDataset<T>, d: usize) -> Result<SelectionResult<T>> {
    maxima_hunting_select_with(data, d, DcovMethod::Naive)
}

pub fn maxima_hunting_select_with<T: Scalar>(
    data: &FunctionalDataset<T>,
    d: usize,
    method: DcovMethod,
) -> Result<SelectionResult<T>> {
    if d < 1 {
        return Err(Error::InvalidParameter("MH needs d >= 1".into()));
    }
    let curve = relevance_curve_with(data, method)?;
    Ok(maxima_from_curve(&curve).truncated(d))
}

/// Every local maximum of `curve`, ranked.
pub fn maxima_from_curve<T: Scalar>(curve: &RelevanceCurve<T>) -> SelectionResult<T> {
    let mut out = SelectionResult::empty(SelectionMethod::Mh, None, None);
    for i in find_local_maxima(curve) {
        out.push(&curve.grid, i, curve.values[i], None);
    }
    out
}

fn check_threshold<T: Scalar>(name: &str, v: T) -> Result<()> {
    if !(v > T::zero() && v < T::one()) {
        return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")));
    }
    Ok(())
}

/// Nearest indices on each side of `idx` (within `lo..=hi`) whose squared
/// distance correlation with column `idx` is at most `r`.
fn redundancy_indices<T: Scalar>(
    columns: &[Vec<T>],
    idx: usize,
    lo: usize,
    hi: usize,
    r: T,
    method: DcovMethod,
) -> Result<(Option<usize>, Option<usize>)> {
    let center = Prepared::new(&columns[idx], method);
    let center_var = center.variance()?;
    let dcor = |j: usize| -> Result<T> {
        let other = Prepared::new(&columns[j], method);
        let v = other.variance()?;
        if !(center_var * v > T::zero()) {
            return Ok(T::zero());
        }
        Ok((center.dcov(&other)? / (center_var * v).sqrt())
            .max(T::zero())
            .min(T::one()))
    };
    let mut minus = None;
    for j in (lo..idx).rev() {
        if dcor(j)? <= r {
            minus = Some(j);
            break;
        }
    }
    let mut plus = None;
    for j in idx + 1..=hi {
        if dcor(j)? <= r {
            plus = Some(j);
            break;
        }
    }
    Ok((minus, plus))
}

/// `(t_minus, t_plus)`: the closest grid times left and right of `t_max`
/// inside the node that are not redundant with it, i.e. whose squared
/// distance correlation with `X(t_max)` is at most `r`.
pub fn redundancy_bounds<T: Scalar>(
    data: &FunctionalDataset<T>,
    node: &IntervalNode<T>,
    t_max: T,
    r: T,
) -> Result<(Option<T>, Option<T>)> {
    check_threshold("r", r)?;
    let grid = data.grid();
    let idx = grid.index_of(t_max).ok_or(Error::NotOnGrid(t_max.to_f64_lossy()))?;
    if !node.contains(t_max) {
        return Err(Error::InvalidParameter(format!("t_max = {t_max} outside the node")));
    }
    let (lo, hi) = crate::correction::node_index_range(grid, node)
        .ok_or_else(|| Error::InvalidParameter("node contains no grid point".into()))?;
    let columns = data.columns();
    let (m, p) = redundancy_indices(&columns, idx, lo, hi, r, DcovMethod::Naive)?;
    Ok((m.map(|j| grid.get(j)), p.map(|j| grid.get(j))))
}

struct Rmh<'a, T> {
    grid: &'a Grid<T>,
    columns: Vec<Vec<T>>,
    relevance: LabelRelevance<T>,
    method: DcovMethod,
    r: T,
    s: T,
    out: SelectionResult<T>,
}

impl<T: Scalar> Rmh<'_, T> {
    fn visit(&mut self, node: IntervalNode<T>, lo: usize, hi: usize, parent: Option<usize>) -> Result<()> {
        let curve = self.relevance.relevance_of_columns(&self.columns, lo..hi + 1)?;
        let Some(k) = argmax(&curve) else {
            return Ok(());
        };
        if !(curve[k] > self.s) {
            return Ok(());
        }
        let idx = lo + k;
        let me = self.out.push(self.grid, idx, curve[k], parent);
        let (minus, plus) = redundancy_indices(&self.columns, idx, lo, hi, self.r, self.method)?;
        correct_columns(&mut self.columns, self.grid, &node, idx, lo, hi)?;

        let t0 = self.grid.get(idx);
        if let Some(m) = minus.filter(|&m| m > lo) {
            let child = node.left_child(t0, self.grid.get(m))?;
            self.visit(child, lo, m, Some(me))?;
        }
        if let Some(p) = plus.filter(|&p| p < hi) {
            let child = node.right_child(t0, self.grid.get(p))?;
            self.visit(child, p, hi, Some(me))?;
        }
        Ok(())
    }
}

/// Recursive maxima hunting with redundancy threshold `r` and relevance
/// threshold `s`, using the naive estimator.
pub fn rmh_select<T: Scalar>(data: &FunctionalDataset<T>, r: T, s: T) -> Result<SelectionResult<T>> {
    rmh_select_with(data, r, s, DcovMethod::Naive)
}

pub fn rmh_select_with<T: Scalar>(
    data: &FunctionalDataset<T>,
    r: T,
    s: T,
    method: DcovMethod,
) -> Result<SelectionResult<T>> {
    check_threshold("r", r)?;
    check_threshold("s", s)?;
    let grid = data.grid();
    let mut state = Rmh {
        grid,
        columns: data.columns(),
        relevance: LabelRelevance::new(data.labels(), method)?,
        method,
        r,
        s,
        out: SelectionResult::empty(SelectionMethod::Rmh, Some(r), Some(s)),
    };
    state.visit(IntervalNode::root(grid), 0, grid.len() - 1, None)?;
    Ok(state.out)
}

/// Trajectories restricted to selected time points.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedData<T> {
    /// Row-major `N x d`.
    pub features: Vec<T>,
    pub dim: usize,
    pub labels: Vec<u8>,
}

impl<T: Scalar> ReducedData<T> {
    pub fn new(features: Vec<T>, dim: usize, labels: Vec<u8>) -> Result<Self> {
        if features.len() != dim * labels.len() {
            return Err(Error::Shape(format!(
                "{} features for {} rows of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        Ok(ReducedData { features, dim, labels })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    /// No columns: the caller needs a fallback feature.
    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Keeps the first `d` columns.
    pub fn prefix(&self, d: usize) -> Self {
        let d = d.min(self.dim);
        let mut features = Vec::with_capacity(d * self.n_rows());
        for i in 0..self.n_rows() {
            features.extend_from_slice(&self.row(i)[..d]);
        }
        ReducedData {
            features,
            dim: d,
            labels: self.labels.clone(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut features = Vec::with_capacity(rows.len() * self.dim);
        for &i in rows {
            features.extend_from_slice(self.row(i));
        }
        ReducedData {
            features,
            dim: self.dim,
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Columns of the original data at the selected times, in selection order.
pub fn reduce_dataset<T: Scalar>(
    data: &FunctionalDataset<T>,
    selection: &SelectionResult<T>,
) -> Result<ReducedData<T>> {
    reduce_to_times(data, &selection.times)
}

pub fn reduce_to_times<T: Scalar>(data: &FunctionalDataset<T>, times: &[T]) -> Result<ReducedData<T>> {
    let idx: Vec<usize> = times
        .iter()
        .map(|&t| data.grid().index_of(t).ok_or(Error::NotOnGrid(t.to_f64_lossy())))
        .collect::<Result<_>>()?;
    let mut features = Vec::with_capacity(idx.len() * data.n_rows());
    for row in data.rows() {
        features.extend(idx.iter().map(|&j| row[j]));
    }
    ReducedData::new(features, idx.len(), data.labels().to_vec())
}
