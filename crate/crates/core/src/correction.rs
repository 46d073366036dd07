//! Removal of the information carried by a selected point.
//!
//! Once `X(t0)` has been selected, every value in the current search interval
//! is replaced by `X(t) - E[X(t) | X(t0)]`. Under a Brownian prior pinned at
//! `left_anchor`:
//!
//! ```text
//! E[X(t) | X(t0)] = min(u, u0) / u0 * X(t0),      u = t - left_anchor
//! ```
//!
//! and under a Brownian bridge pinned at both anchors, with `u` the position
//! rescaled to `[0, 1]` between the anchors:
//!
//! ```text
//! E[X(t) | X(t0)] = (min(u, u0) - u u0) / (u0 (1 - u0)) * X(t0)
//! ```
//!
//! After a correction at `t0` the corrected process is zero at `t0`. The
//! part to the left of `t0` is therefore a bridge ending at `t0` and the
//! part to the right starts afresh from a pin at `t0`; [`IntervalNode`]
//! carries these pins through the recursion.

use crate::error::{Error, Result};
use crate::fdata::{FunctionalDataset, Grid};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Pinned on the left only.
    Brownian,
    /// Pinned on both sides.
    Bridge,
}

/// A search interval `[t_inf, t_sup]` together with the pins of the
/// (corrected) process around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalNode<T> {
    pub t_inf: T,
    pub t_sup: T,
    pub left_anchor: T,
    pub right_anchor: Option<T>,
}

impl<T: Scalar> IntervalNode<T> {
    pub fn new(t_inf: T, t_sup: T, left_anchor: T, right_anchor: Option<T>) -> Result<Self> {
        let ok = left_anchor <= t_inf && t_inf <= t_sup && right_anchor.is_none_or(|r| t_sup <= r && left_anchor < r);
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "inconsistent interval node: [{t_inf}, {t_sup}] anchors {left_anchor} / {right_anchor:?}"
            )));
        }
        Ok(IntervalNode {
            t_inf,
            t_sup,
            left_anchor,
            right_anchor,
        })
    }

    /// Whole grid, Brownian pinned at the origin.
    pub fn root(grid: &Grid<T>) -> Self {
        IntervalNode {
            t_inf: grid.first(),
            t_sup: grid.last(),
            left_anchor: T::zero().min(grid.first()),
            right_anchor: None,
        }
    }

    pub fn kind(&self) -> NodeKind {
        if self.right_anchor.is_some() {
            NodeKind::Bridge
        } else {
            NodeKind::Brownian
        }
    }

    /// Interval `[t_inf, t_minus]` left of a correction at `t0`: pinned at
    /// this node's left anchor and at `t0`.
    pub fn left_child(&self, t0: T, t_minus: T) -> Result<Self> {
        Self::new(self.t_inf, t_minus, self.left_anchor, Some(t0))
    }

    /// Interval `[t_plus, t_sup]` right of a correction at `t0`: pinned at
    /// `t0` and at this node's right anchor, if any.
    pub fn right_child(&self, t0: T, t_plus: T) -> Result<Self> {
        Self::new(t_plus, self.t_sup, t0, self.right_anchor)
    }

    pub fn contains(&self, t: T) -> bool {
        self.t_inf <= t && t <= self.t_sup
    }

    /// Coefficient `c` such that `E[X(t) | X(t0)] = c X(t0)`.
    pub fn expectation_factor(&self, t0: T, t: T) -> Result<T> {
        if !self.contains(t0) {
            return Err(Error::InvalidParameter(format!(
                "conditioning time {t0} outside [{}, {}]",
                self.t_inf, self.t_sup
            )));
        }
        let upper = self.right_anchor.unwrap_or(self.t_sup);
        if t < self.left_anchor || t > upper {
            return Err(Error::InvalidParameter(format!(
                "time {t} outside [{}, {upper}]",
                self.left_anchor
            )));
        }
        let u = t - self.left_anchor;
        let u0 = t0 - self.left_anchor;
        match self.right_anchor {
            None => {
                if u0 <= T::zero() {
                    // Conditioning on the pin: the value there is a constant
                    // offset of everything to its right.
                    Ok(T::one())
                } else {
                    Ok(u.min(u0) / u0)
                }
            }
            Some(r) => {
                let len = r - self.left_anchor;
                let (u, u0) = (u / len, u0 / len);
                if u0 <= T::zero() || u0 >= T::one() {
                    return Err(Error::DegenerateAnchor(format!(
                        "bridge conditioned at its pin t0 = {t0}"
                    )));
                }
                if t == t0 {
                    return Ok(T::one());
                }
                Ok((u.min(u0) - u * u0) / (u0 * (T::one() - u0)))
            }
        }
    }
}

/// `E[X(t) | X(t0) = x_t0]` under the node's prior.
pub fn conditional_expectation<T: Scalar>(node: &IntervalNode<T>, t0: T, t: T, x_t0: T) -> Result<T> {
    Ok(node.expectation_factor(t0, t)? * x_t0)
}

/// Column-major correction over grid indices `lo..=hi`; `idx0` is the
/// conditioning column.
pub(crate) fn correct_columns<T: Scalar>(
    columns: &mut [Vec<T>],
    grid: &Grid<T>,
    node: &IntervalNode<T>,
    idx0: usize,
    lo: usize,
    hi: usize,
) -> Result<()> {
    let t0 = grid.get(idx0);
    let factors: Vec<T> = (lo..=hi)
        .map(|j| node.expectation_factor(t0, grid.get(j)))
        .collect::<Result<_>>()?;
    let anchor = columns[idx0].clone();
    for (j, &f) in (lo..=hi).zip(&factors) {
        if f.is_zero() {
            continue;
        }
        for (v, &x0) in columns[j].iter_mut().zip(&anchor) {
            *v -= f * x0;
        }
    }
    Ok(())
}

/// Index range `lo..=hi` of the grid points inside the node.
pub(crate) fn node_index_range<T: Scalar>(grid: &Grid<T>, node: &IntervalNode<T>) -> Option<(usize, usize)> {
    let pts = grid.points();
    let lo = pts.partition_point(|&p| p < node.t_inf);
    let hi = pts.partition_point(|&p| p <= node.t_sup);
    (lo < hi).then(|| (lo, hi - 1))
}

/// Replaces `X(t)` by `X(t) - E[X(t) | X(t0)]` for every trajectory and every
/// grid point inside the node; values outside the node are untouched.
pub fn apply_correction<T: Scalar>(
    data: &FunctionalDataset<T>,
    node: &IntervalNode<T>,
    t0: T,
) -> Result<FunctionalDataset<T>> {
    let grid = data.grid();
    let idx0 = grid.index_of(t0).ok_or(Error::NotOnGrid(t0.to_f64_lossy()))?;
    let (lo, hi) =
        node_index_range(grid, node).ok_or_else(|| Error::InvalidParameter("node contains no grid point".into()))?;
    let mut columns = data.columns();
    correct_columns(&mut columns, grid, node, idx0, lo, hi)?;
    Ok(data.with_columns(&columns))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_factor() {
        let node = IntervalNode::<f64>::new(0.0, 1.0, 0.0, None).unwrap();
        let e = conditional_expectation(&node, 0.625, 0.3125, 2.0).unwrap();
        assert!((e - 1.0).abs() < 1e-15);
        assert_eq!(conditional_expectation(&node, 0.625, 0.625, 2.0).unwrap(), 2.0);
        assert_eq!(conditional_expectation(&node, 0.625, 0.9, 2.0).unwrap(), 2.0);
        assert_eq!(conditional_expectation(&node, 0.625, 0.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn bridge_factor() {
        let node = IntervalNode::<f64>::new(0.0, 1.0, 0.0, Some(1.0)).unwrap();
        let e = conditional_expectation(&node, 0.5, 0.75, 3.0).unwrap();
        // (1 - t) / (1 - t0) = 1/2
        assert!((e - 1.5).abs() < 1e-15);
        assert!((conditional_expectation(&node, 0.5, 0.5, 3.0).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(conditional_expectation(&node, 0.5, 0.0, 3.0).unwrap(), 0.0);
        assert!(conditional_expectation(&node, 0.5, 1.0, 3.0).unwrap().abs() < 1e-15);
        // rescaled bridge between 0.25 and 0.75
        let inner = IntervalNode::<f64>::new(0.3, 0.7, 0.25, Some(0.75)).unwrap();
        let e = conditional_expectation(&inner, 0.5, 0.375, 1.0).unwrap();
        assert!((e - 0.5).abs() < 1e-15);
        assert_eq!(conditional_expectation(&inner, 0.5, 0.25, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_anchor() {
        let node = IntervalNode::<f64>::new(0.0, 1.0, 0.0, None).unwrap();
        assert_eq!(conditional_expectation(&node, 0.0, 0.5, 1.5).unwrap(), 1.5);
        let bridge = IntervalNode::<f64>::new(0.0, 0.5, 0.0, Some(0.5)).unwrap();
        assert!(matches!(
            bridge.expectation_factor(0.5, 0.2),
            Err(Error::DegenerateAnchor(_))
        ));
    }

    #[test]
    fn invalid_nodes() {
        assert!(IntervalNode::<f64>::new(0.5, 0.4, 0.0, None::<f64>).is_err());
        assert!(IntervalNode::<f64>::new(0.1, 0.4, 0.2, None::<f64>).is_err());
        assert!(IntervalNode::<f64>::new(0.1, 0.4, 0.0, Some(0.3)).is_err());
        let n = IntervalNode::<f64>::new(0.1, 0.4, 0.0, None::<f64>).unwrap();
        assert!(n.expectation_factor(0.5, 0.2).is_err());
        assert!(n.expectation_factor(0.2, 0.45).is_err());
    }

    #[test]
    fn children_carry_pins() {
        let root = IntervalNode::<f64>::new(0.005, 1.0, 0.0, None).unwrap();
        let left = root.left_child(0.625, 0.6).unwrap();
        assert_eq!(left.kind(), NodeKind::Bridge);
        assert_eq!((left.left_anchor, left.right_anchor), (0.0, Some(0.625)));
        let right = root.right_child(0.625, 0.65).unwrap();
        assert_eq!(right.kind(), NodeKind::Brownian);
        assert_eq!(right.left_anchor, 0.625);
        // right child of a bridge stays a bridge
        let inner = left.right_child(0.5, 0.52).unwrap();
        assert_eq!((inner.left_anchor, inner.right_anchor), (0.5, Some(0.625)));
    }

    #[test]
    fn correction_zeroes_the_conditioning_column() {
        let g = Grid::right_endpoints(8).unwrap();
        let rows = vec![
            vec![0.1, 0.3, -0.2, 0.4, 0.9, 1.1, 0.7, 0.5],
            vec![-0.3, -0.1, 0.2, 0.0, 0.3, 0.2, -0.4, -0.6],
        ];
        let d = FunctionalDataset::<f64>::new(g, rows, vec![0, 1]).unwrap();
        let node = IntervalNode::root(d.grid());
        let c = apply_correction(&d, &node, 0.625).unwrap();
        assert!(c.column(4).iter().all(|&v| v == 0.0));
        // right of t0 the whole X(t0) is subtracted
        assert!((c.value(0, 7) - (0.5 - 0.9)).abs() < 1e-15);
        // left of t0 a fraction t/t0
        assert!((c.value(0, 1) - (0.3 - 0.25 / 0.625 * 0.9)).abs() < 1e-15);
        assert!(matches!(apply_correction(&d, &node, 0.3), Err(Error::NotOnGrid(_))));
        // nodes restrict the range
        let sub = IntervalNode::<f64>::new(0.75, 1.0, 0.625, None).unwrap();
        let c2 = apply_correction(&d, &sub, 0.875).unwrap();
        assert_eq!(&c2.row(0)[..5], &d.row(0)[..5]);
    }
}
