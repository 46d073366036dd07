//! Recursive maxima hunting (RMH) for variable selection in binary
//! classification of functional data.
//!
//! Trajectories observed on a common grid are reduced to a handful of time
//! points by hunting the maxima of the squared distance correlation between
//! `X(t)` and the class label. After each selection, the information carried
//! by the selected point is removed by subtracting the conditional
//! expectation of a Brownian motion (or Brownian bridge) before the search
//! continues on either side.
//!
//! Besides the selector itself the crate ships what is needed to benchmark
//! it: synthetic Brownian-plus-trend problems with closed form Bayes errors,
//! PCA/PLS projection baselines, kNN and Fisher discriminant classifiers and
//! a reproducible Monte-Carlo harness.
//!
//! Numeric code is generic over [`Scalar`] (`f32`/`f64`); the aliases below
//! fix the common `f64` instantiation.

// `!(x > 0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod classify;
pub mod correction;
pub mod depmeasure;
mod error;
pub mod fdata;
pub mod reducers;
mod scalar;
pub mod selectors;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::{LinalgScalar, Scalar};

pub use classify::{error_rate, fisher_lda_fit, knn_classify, select_k_cv};
pub use depmeasure::{dcor_sq, dcov_sq, relevance_curve, DcovMethod};
pub use fdata::{load_dataset, save_dataset, stratified_split, CsvSchema};
pub use selectors::{maxima_hunting_select, reduce_dataset, rmh_select};

pub type Grid = fdata::Grid<f64>;
pub type Dataset = fdata::FunctionalDataset<f64>;
pub type SplitPair = fdata::SplitPair<f64>;
pub type RelevanceCurve = depmeasure::RelevanceCurve<f64>;
pub type TrendSpec = synth::TrendSpec<f64>;
pub type SyntheticProblem = synth::SyntheticProblem<f64>;
pub type IntervalNode = correction::IntervalNode<f64>;
pub type SelectionResult = selectors::SelectionResult<f64>;
pub type ReducedData = selectors::ReducedData<f64>;
pub type ProjectionModel = reducers::ProjectionModel<f64>;
pub type Classifier = classify::Classifier<f64>;

pub type Grid32 = fdata::Grid<f32>;
pub type Dataset32 = fdata::FunctionalDataset<f32>;
