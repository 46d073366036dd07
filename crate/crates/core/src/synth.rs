//! Brownian motion versus Brownian motion plus a deterministic trend.
//!
//! Class 0 trajectories are standard Brownian motion `B(t)`, class 1 are
//! `B(t) + m(t)`. For trends in the Dirichlet space (absolutely continuous,
//! `m(0) = 0`, `m'` square integrable) the optimal rule is linear in the
//! trajectory:
//!
//! ```text
//! g*(x) = 1  iff  <x, m>_H > ||m||_H^2 / 2,    <x, m>_H = int x'(s) m'(s) ds
//! ```
//!
//! with Bayes error `1 - Phi(||m'|| / 2)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdata::{FunctionalDataset, Grid};
use crate::scalar::Scalar;

/// `c * Phi_{m,k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiTerm<T> {
    pub coef: T,
    pub m: u32,
    pub k: u32,
}

impl<T: Scalar> PhiTerm<T> {
    pub fn new(coef: T, m: u32, k: u32) -> Self {
        PhiTerm { coef, m, k }
    }
}

/// Smooth part of a trend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothTerm<T> {
    /// `sum_i coefs[i] t^i`; the constant coefficient must be zero.
    Polynomial { coefs: Vec<T> },
    /// `amplitude * sin(2 pi frequency t)`.
    Sine { amplitude: T, frequency: T },
}

impl<T: Scalar> SmoothTerm<T> {
    fn value(&self, t: T) -> T {
        match self {
            SmoothTerm::Polynomial { coefs } => coefs.iter().rev().fold(T::zero(), |acc, &c| acc * t + c),
            SmoothTerm::Sine { amplitude, frequency } => *amplitude * (T::TAU() * *frequency * t).sin(),
        }
    }

    fn derivative(&self, t: T) -> T {
        match self {
            SmoothTerm::Polynomial { coefs } => coefs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(T::zero(), |acc, (i, &c)| acc * t + c * T::of_usize(i)),
            SmoothTerm::Sine { amplitude, frequency } => {
                let w = T::TAU() * *frequency;
                *amplitude * w * (w * t).cos()
            }
        }
    }
}

/// Deterministic trend `m(t)` separating the two classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrendSpec<T> {
    /// `2 Phi_{3,3}`.
    Peak,
    /// `2 Phi_{3,2} + 3 Phi_{3,3} - 2 Phi_{2,2}`.
    Peak2,
    /// `2 t^2`.
    Square,
    /// `sin(2 pi t) / 2`.
    Sin,
    Custom {
        phi: Vec<PhiTerm<T>>,
        smooth: Option<SmoothTerm<T>>,
    },
}

impl<T: Scalar> TrendSpec<T> {
    /// The trend `m = 0` (classes indistinguishable).
    pub fn zero() -> Self {
        TrendSpec::Custom {
            phi: Vec::new(),
            smooth: None,
        }
    }

    /// `peak`, `peak2`, `square`, `sin` or `zero`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "peak" => Ok(TrendSpec::Peak),
            "peak2" => Ok(TrendSpec::Peak2),
            "square" => Ok(TrendSpec::Square),
            "sin" => Ok(TrendSpec::Sin),
            "zero" | "null" => Ok(Self::zero()),
            other => Err(Error::InvalidParameter(format!("unknown synthetic problem `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TrendSpec::Peak => "peak",
            TrendSpec::Peak2 => "peak2",
            TrendSpec::Square => "square",
            TrendSpec::Sin => "sin",
            TrendSpec::Custom { .. } => "custom",
        }
    }

    /// Decomposition into `Phi_{m,k}` terms and a smooth remainder.
    pub fn components(&self) -> (Vec<PhiTerm<T>>, Option<SmoothTerm<T>>) {
        let c = T::of;
        match self {
            TrendSpec::Peak => (vec![PhiTerm::new(c(2.0), 3, 3)], None),
            TrendSpec::Peak2 => (
                vec![
                    PhiTerm::new(c(2.0), 3, 2),
                    PhiTerm::new(c(3.0), 3, 3),
                    PhiTerm::new(c(-2.0), 2, 2),
                ],
                None,
            ),
            TrendSpec::Square => (
                Vec::new(),
                Some(SmoothTerm::Polynomial {
                    coefs: vec![c(0.0), c(0.0), c(2.0)],
                }),
            ),
            TrendSpec::Sin => (
                Vec::new(),
                Some(SmoothTerm::Sine {
                    amplitude: c(0.5),
                    frequency: c(1.0),
                }),
            ),
            TrendSpec::Custom { phi, smooth } => (phi.clone(), smooth.clone()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (phi, smooth) = self.components();
        for term in &phi {
            check_phi_index(term.m, term.k)?;
            if !term.coef.is_finite() {
                return Err(Error::InvalidParameter("non-finite trend coefficient".into()));
            }
        }
        match smooth {
            Some(SmoothTerm::Polynomial { coefs }) => {
                if coefs.first().is_some_and(|c| !c.is_zero()) {
                    return Err(Error::InvalidParameter("polynomial trend must vanish at t = 0".into()));
                }
                if coefs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidParameter("non-finite trend coefficient".into()));
                }
            }
            Some(SmoothTerm::Sine { amplitude, frequency }) if !amplitude.is_finite() || !frequency.is_finite() => {
                return Err(Error::InvalidParameter("non-finite sine parameters".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// `m(t)`.
    pub fn value(&self, t: T) -> Result<T> {
        let (phi, smooth) = self.components();
        let mut v = smooth.map_or(T::zero(), |s| s.value(t));
        for term in phi {
            v += term.coef * phi_mk(term.m, term.k, t)?;
        }
        Ok(v)
    }

    /// `m'(t)`; right derivative at the breakpoints of the `Phi` terms.
    pub fn derivative(&self, t: T) -> Result<T> {
        let (phi, smooth) = self.components();
        let mut v = smooth.map_or(T::zero(), |s| s.derivative(t));
        for term in phi {
            v += term.coef * phi_mk_derivative(term.m, term.k, t)?;
        }
        Ok(v)
    }

    /// `||m'||^2` in `L^2[0, 1]`.
    ///
    /// Pure `Phi` combinations use orthonormality (coefficients of repeated
    /// indices are merged first); anything with a smooth part is integrated
    /// with composite 5-point Gauss-Legendre on a partition refining every
    /// dyadic breakpoint.
    pub fn derivative_energy(&self) -> Result<T> {
        self.validate()?;
        let (phi, smooth) = self.components();
        if smooth.is_none() {
            let mut merged: Vec<PhiTerm<T>> = Vec::new();
            for term in phi {
                match merged.iter_mut().find(|t| t.m == term.m && t.k == term.k) {
                    Some(t) => t.coef += term.coef,
                    None => merged.push(term),
                }
            }
            return Ok(merged.iter().map(|t| t.coef * t.coef).sum());
        }
        let depth = phi.iter().map(|t| t.m).max().unwrap_or(0).max(10);
        gauss_legendre(|t| self.derivative(t).map(|d| d * d), 1usize << depth)
    }
}

fn check_phi_index(m: u32, k: u32) -> Result<()> {
    if !(1..=52).contains(&m) || k < 1 || u64::from(k) > 1u64 << (m - 1) {
        return Err(Error::InvalidParameter(format!(
            "Phi_{{m,k}} requires m >= 1 and 1 <= k <= 2^(m-1), got m={m}, k={k}"
        )));
    }
    Ok(())
}

/// Support `(a, b, c)` and slope of `Phi_{m,k}`: it rises on `(a, b)` and
/// falls on `(b, c)`.
fn phi_shape<T: Scalar>(m: u32, k: u32) -> Result<(T, T, T, T)> {
    check_phi_index(m, k)?;
    let scale = T::of((1u64 << m) as f64);
    let a = T::of(f64::from(2 * k - 2)) / scale;
    let b = T::of(f64::from(2 * k - 1)) / scale;
    let c = T::of(f64::from(2 * k)) / scale;
    let slope = T::of(((1u64 << (m - 1)) as f64).sqrt());
    Ok((a, b, c, slope))
}

/// `Phi_{m,k}(t) = int_0^t sqrt(2^(m-1)) [1_(a,b)(s) - 1_(b,c)(s)] ds`
/// with `a = (2k-2)/2^m`, `b = (2k-1)/2^m`, `c = 2k/2^m`: a tent of height
/// `sqrt(2^(m-1)) / 2^m` peaking at `b`.
pub fn phi_mk<T: Scalar>(m: u32, k: u32, t: T) -> Result<T> {
    let (a, b, c, slope) = phi_shape::<T>(m, k)?;
    Ok(if t <= a || t >= c {
        T::zero()
    } else if t <= b {
        slope * (t - a)
    } else {
        slope * (c - t)
    })
}

/// `Phi'_{m,k}(t)` (right-continuous).
pub fn phi_mk_derivative<T: Scalar>(m: u32, k: u32, t: T) -> Result<T> {
    let (a, b, c, slope) = phi_shape::<T>(m, k)?;
    Ok(if t < a || t >= c {
        T::zero()
    } else if t < b {
        slope
    } else {
        -slope
    })
}

fn gauss_legendre<T: Scalar>(f: impl Fn(T) -> Result<T>, pieces: usize) -> Result<T> {
    const NODES: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];
    let h = T::one() / T::of_usize(pieces);
    let half = h / T::of(2.0);
    let mut total = T::zero();
    for i in 0..pieces {
        let mid = (T::of_usize(i) + T::of(0.5)) * h;
        for (&x, &w) in NODES.iter().zip(&WEIGHTS) {
            total += T::of(w) * half * f(mid + T::of(x) * half)?;
        }
    }
    Ok(total)
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Bayes error `1 - Phi(||m'|| / 2)`; `1/2` for the zero trend.
pub fn bayes_error<T: Scalar>(trend: &TrendSpec<T>) -> Result<T> {
    let energy = trend.derivative_energy()?.to_f64_lossy();
    Ok(T::of(1.0 - normal_cdf(energy.sqrt() / 2.0)))
}

/// `m(t)` on the grid.
pub fn make_trend<T: Scalar>(spec: &TrendSpec<T>, grid: &Grid<T>) -> Result<Vec<T>> {
    spec.validate()?;
    grid.points().iter().map(|&t| spec.value(t)).collect()
}

/// One Brownian path on `grid`, anchored at `X(0) = 0` even when the grid
/// does not contain the origin.
pub fn brownian_sample<T: Scalar>(grid: &Grid<T>, seed: u64) -> Vec<T> {
    brownian_sample_with(grid, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn brownian_sample_with<T: Scalar, R: Rng + ?Sized>(grid: &Grid<T>, rng: &mut R) -> Vec<T> {
    let mut out = Vec::with_capacity(grid.len());
    brownian_fill(grid, rng, &mut out);
    out
}

fn brownian_fill<T: Scalar, R: Rng + ?Sized>(grid: &Grid<T>, rng: &mut R, out: &mut Vec<T>) {
    let mut prev_t = T::zero();
    let mut level = T::zero();
    for &t in grid.points() {
        let z: f64 = rng.sample(StandardNormal);
        level += T::of(z) * (t - prev_t).sqrt();
        out.push(level);
        prev_t = t;
    }
}

/// A synthetic two-class problem; classes are always balanced.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProblem<T> {
    pub trend: TrendSpec<T>,
    pub grid: Grid<T>,
}

impl<T: Scalar> SyntheticProblem<T> {
    pub fn new(trend: TrendSpec<T>, grid: Grid<T>) -> Result<Self> {
        trend.validate()?;
        Ok(SyntheticProblem { trend, grid })
    }

    /// Named problem on the default 200-point grid `i/200`.
    pub fn named(name: &str) -> Result<Self> {
        Self::new(TrendSpec::from_name(name)?, Grid::right_endpoints(200)?)
    }

    pub fn class_balance(&self) -> f64 {
        0.5
    }
}

/// `n/2` rows of `B(t)` labelled 0 and `n/2` rows of `B(t) + m(t)` labelled
/// 1, in a seed-determined random order.
pub fn generate_problem<T: Scalar>(problem: &SyntheticProblem<T>, n: usize, seed: u64) -> Result<FunctionalDataset<T>> {
    if !n.is_multiple_of(2) || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "sample size must be even and positive, got {n}"
        )));
    }
    let trend = make_trend(&problem.trend, &problem.grid)?;
    let p = problem.grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut values = Vec::with_capacity(n * p);
    let mut labels = Vec::with_capacity(n);
    for &slot in &order {
        let label = u8::from(slot >= n / 2);
        let start = values.len();
        brownian_fill(&problem.grid, &mut rng, &mut values);
        if label == 1 {
            for (v, &m) in values[start..].iter_mut().zip(&trend) {
                *v += m;
            }
        }
        labels.push(label);
    }
    FunctionalDataset::from_flat(problem.grid.clone(), values, labels)
}

/// Linear optimal rule for Brownian motion with and without the trend,
/// discretized on a grid.
///
/// Increments of the observed path are independent Gaussians, so on the
/// grid the likelihood ratio test reads
/// `sum_i dx_i dm_i / dt_i > (1/2) sum_i dm_i^2 / dt_i`, the forward-difference
/// and trapezoid discretization of `<x, m>_H > ||m||_H^2 / 2`. It is exact
/// when `m` is piecewise linear with breakpoints on the grid.
#[derive(Debug, Clone)]
pub struct LinearBayesRule<T> {
    weights: Vec<T>,
    threshold: T,
}

impl<T: Scalar> LinearBayesRule<T> {
    pub fn new(trend: &TrendSpec<T>, grid: &Grid<T>) -> Result<Self> {
        let m = make_trend(trend, grid)?;
        let t = grid.points();
        let p = t.len();
        // slopes[i]: trend slope on the interval ending at t[i]; the first
        // interval starts at the origin where both path and trend vanish.
        let mut slopes = Vec::with_capacity(p);
        let mut energy = T::zero();
        let (mut prev_t, mut prev_m) = (T::zero(), T::zero());
        for i in 0..p {
            let dt = t[i] - prev_t;
            if dt > T::zero() {
                let dm = m[i] - prev_m;
                slopes.push(dm / dt);
                energy += dm * dm / dt;
            } else {
                slopes.push(T::zero());
            }
            prev_t = t[i];
            prev_m = m[i];
        }
        if !(energy > T::zero()) {
            return Err(Error::NoSignal);
        }
        let weights = (0..p)
            .map(|i| slopes[i] - slopes.get(i + 1).copied().unwrap_or(T::zero()))
            .collect();
        Ok(LinearBayesRule {
            weights,
            threshold: energy / T::of(2.0),
        })
    }

    /// `<x, m>_H` on the grid.
    pub fn score(&self, x: &[T]) -> T {
        self.weights.iter().zip(x).map(|(&w, &v)| w * v).sum()
    }

    pub fn threshold(&self) -> T {
        self.threshold
    }

    /// Coefficient of every grid value in the score.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn classify(&self, x: &[T]) -> u8 {
        u8::from(self.score(x) > self.threshold)
    }
}

/// Optimal label for one trajectory.
pub fn bayes_rule_linear_trend<T: Scalar>(x: &[T], trend: &TrendSpec<T>, grid: &Grid<T>) -> Result<u8> {
    if x.len() != grid.len() {
        return Err(Error::Shape(format!(
            "trajectory has {} values, grid has {}",
            x.len(),
            grid.len()
        )));
    }
    Ok(LinearBayesRule::new(trend, grid)?.classify(x))
}
