//! Fit-free trajectory transforms applied before classification.

use super::{FunctionalDataset, Grid};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default Gaussian kernel standard deviation, as a fraction of the domain.
pub const DEFAULT_SMOOTHING_BANDWIDTH: f64 = 0.05;

/// Three-point divided second differences at interior grid points.
///
/// With `h0 = t_i - t_{i-1}` and `h1 = t_{i+1} - t_i`:
/// `x''(t_i) ~ 2 [ (x_{i+1} - x_i)/h1 - (x_i - x_{i-1})/h0 ] / (h0 + h1)`,
/// exact for quadratics on any grid. The output grid drops both endpoints,
/// so at least 4 input points are needed for it to remain a valid grid.
pub fn second_derivative<T: Scalar>(data: &FunctionalDataset<T>) -> Result<FunctionalDataset<T>> {
    let p = data.n_points();
    if p < 4 {
        return Err(Error::InvalidGrid(format!(
            "second derivative needs at least 4 grid points, got {p}"
        )));
    }
    let t = data.grid().points();
    let weights: Vec<[T; 3]> = (1..p - 1)
        .map(|i| {
            let h0 = t[i] - t[i - 1];
            let h1 = t[i + 1] - t[i];
            let s = T::of(2.0) / (h0 + h1);
            [s / h0, -s * (T::one() / h0 + T::one() / h1), s / h1]
        })
        .collect();
    let grid = Grid::new(t[1..p - 1].to_vec())?;
    let mut values = Vec::with_capacity(data.n_rows() * (p - 2));
    for row in data.rows() {
        values.extend(
            weights
                .iter()
                .enumerate()
                .map(|(k, w)| w[0] * row[k] + w[1] * row[k + 1] + w[2] * row[k + 2]),
        );
    }
    Ok(data.with_values(grid, values))
}

/// Local linear regression smoother with a Gaussian kernel whose standard
/// deviation is `bandwidth` times the domain length. Each trajectory is
/// refitted and evaluated on its own grid.
pub fn local_linear_smooth<T: Scalar>(data: &FunctionalDataset<T>, bandwidth: T) -> Result<FunctionalDataset<T>> {
    if !(bandwidth > T::zero()) || !bandwidth.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    let t = data.grid().points();
    let p = t.len();
    let h = bandwidth * data.grid().span();
    let half = T::of(0.5);

    // Row i of the smoother matrix gives the fitted value at t_i as a linear
    // combination of the observations.
    let mut smoother = vec![T::zero(); p * p];
    for i in 0..p {
        let (mut s0, mut s1, mut s2) = (T::zero(), T::zero(), T::zero());
        let mut w = vec![T::zero(); p];
        for j in 0..p {
            let d = t[j] - t[i];
            let z = d / h;
            w[j] = (-half * z * z).exp();
            s0 += w[j];
            s1 += w[j] * d;
            s2 += w[j] * d * d;
        }
        let det = s0 * s2 - s1 * s1;
        let row = &mut smoother[i * p..(i + 1) * p];
        if det > T::epsilon() * s0 * s2 {
            for j in 0..p {
                let d = t[j] - t[i];
                row[j] = w[j] * (s2 - s1 * d) / det;
            }
        } else {
            // Kernel too narrow for a slope: fall back to the weighted mean.
            for j in 0..p {
                row[j] = w[j] / s0;
            }
        }
    }

    let mut values = Vec::with_capacity(data.n_rows() * p);
    for x in data.rows() {
        values.extend(
            smoother
                .chunks_exact(p)
                .map(|l| l.iter().zip(x).map(|(&a, &b)| a * b).sum::<T>()),
        );
    }
    Ok(data.with_values(data.grid().clone(), values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(grid: Grid<f64>, f: impl Fn(f64) -> f64) -> FunctionalDataset<f64> {
        let row = grid.points().iter().map(|&t| f(t)).collect();
        FunctionalDataset::new(grid, vec![row], vec![0]).unwrap()
    }

    fn irregular_grid() -> Grid<f64> {
        Grid::new(vec![0.0, 0.03, 0.1, 0.18, 0.2, 0.41, 0.5, 0.77, 0.9, 1.0]).unwrap()
    }

    #[test]
    fn exact_on_quadratics() {
        for g in [Grid::linspace(21).unwrap(), irregular_grid()] {
            let d = second_derivative(&single(g.clone(), |t| t * t)).unwrap();
            assert_eq!(d.n_points(), g.len() - 2);
            assert!(d.row(0).iter().all(|v| (v - 2.0).abs() <= 1e-9));
            let q = second_derivative(&single(g, |t| 3.0 * t * t - t + 4.0)).unwrap();
            assert!(q.row(0).iter().all(|v| (v - 6.0).abs() <= 1e-9));
        }
    }

    #[test]
    fn annihilates_lines() {
        for g in [Grid::linspace(11).unwrap(), irregular_grid()] {
            let d = second_derivative(&single(g, |t| 1.5 - 4.0 * t)).unwrap();
            assert!(d.row(0).iter().all(|v| v.abs() <= 1e-9));
        }
    }

    #[test]
    fn cubic_matches_analytic_derivative() {
        let n = 101;
        let g = Grid::linspace(n).unwrap();
        let h = 1.0 / (n - 1) as f64;
        let d = second_derivative(&single(g, |t| t * t * t)).unwrap();
        for (&t, &v) in d.grid().points().iter().zip(d.row(0)) {
            assert!((v - 6.0 * t).abs() <= 3.0 * h, "t={t} v={v}");
        }
        // irregular spacing is only first-order accurate
        let d = second_derivative(&single(irregular_grid(), |t| t * t * t)).unwrap();
        for (&t, &v) in d.grid().points().iter().zip(d.row(0)) {
            assert!((v - 6.0 * t).abs() <= 6.0 * 0.27, "t={t} v={v}");
        }
    }

    #[test]
    fn too_short_grid() {
        let g = Grid::new(vec![0.0, 0.5, 1.0]).unwrap();
        assert!(second_derivative(&single(g, |t| t)).is_err());
    }

    #[test]
    fn smoother_reproduces_lines() {
        for g in [Grid::linspace(50).unwrap(), irregular_grid()] {
            let d = single(g, |t| 2.0 - 3.0 * t);
            let s = local_linear_smooth(&d, 0.05).unwrap();
            for (a, b) in s.row(0).iter().zip(d.row(0)) {
                assert!((a - b).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn huge_bandwidth_gives_least_squares_line() {
        let g = Grid::linspace(40).unwrap();
        let d = single(g.clone(), |t| (7.0 * t).sin() + t * t);
        let s = local_linear_smooth(&d, 1e4).unwrap();
        // closed-form ordinary least squares
        let t = g.points();
        let y = d.row(0);
        let n = t.len() as f64;
        let tm = t.iter().sum::<f64>() / n;
        let ym = y.iter().sum::<f64>() / n;
        let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
        let sxx: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
        let slope = sxy / sxx;
        for (&ti, &v) in t.iter().zip(s.row(0)) {
            assert!((v - (ym + slope * (ti - tm))).abs() <= 1e-6);
        }
    }

    #[test]
    fn smoothing_reduces_noise_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Grid::linspace(256).unwrap();
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..256).map(|_| rng.random::<f64>() - 0.5).collect())
            .collect();
        let d = FunctionalDataset::new(g, rows, vec![0; 20]).unwrap();
        let s = local_linear_smooth(&d, 0.05).unwrap();
        let var = |x: &[f64]| {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
        };
        for i in 0..20 {
            assert!(var(s.row(i)) < var(d.row(i)));
        }
        assert!(local_linear_smooth(&d, 0.0).is_err());
        assert!(local_linear_smooth(&d, -1.0).is_err());
    }
}
