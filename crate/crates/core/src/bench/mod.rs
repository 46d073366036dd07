//! Monte-Carlo experiment harness.
//!
//! Every repetition draws its data, splits and CV folds from seeds derived
//! from `(master seed, repetition, purpose, training size)` alone, so any
//! subset of repetitions can be rerun in isolation and results do not depend
//! on the number of worker threads.

mod config;
mod pipeline;
mod results;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{ExperimentConfig, Method, PreprocessStep};
pub use pipeline::{fit_method, FittedMethod, PipelineSettings};
pub use results::{
    emit_results, load_results_csv, Aggregate, ExperimentRecord, ExperimentResult, OutputFormat, CSV_HEADER,
};

use crate::classify::{error_rate, fisher_lda_fit};
use crate::error::{Error, Result};
use crate::fdata::{load_dataset, stratified_split, FunctionalDataset};
use crate::selectors::reduce_to_times;
use crate::synth::{generate_problem, SyntheticProblem};

/// What a derived seed is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum SeedPurpose {
    Train = 1,
    Test = 2,
    Split = 3,
    CrossValidation = 4,
    Variables = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one purpose of one repetition.
pub fn derive_seed(master: u64, repetition: usize, purpose: SeedPurpose, n_train: usize) -> u64 {
    [repetition as u64, purpose as u64, n_train as u64]
        .into_iter()
        .fold(splitmix64(master), |z, v| splitmix64(z ^ splitmix64(v)))
}

/// Fits every configured method on `train` and scores it on `test`.
pub fn evaluate_split(
    config: &ExperimentConfig,
    settings: &PipelineSettings,
    train: &FunctionalDataset<f64>,
    test: &FunctionalDataset<f64>,
    repetition: usize,
    n_train: usize,
) -> Result<Vec<ExperimentRecord>> {
    let cv_seed = derive_seed(config.seed, repetition, SeedPurpose::CrossValidation, n_train);
    config
        .methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let fitted = fit_method(method, train, settings, cv_seed)?;
            let error = fitted.test_error(test)?;
            let seconds = if config.record_timing {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            };
            Ok(ExperimentRecord {
                method,
                n_train,
                repetition,
                error,
                n_vars: fitted.n_vars,
                seconds,
                selected_times: fitted.selected_times,
            })
        })
        .collect()
}

fn collect_ordered(chunks: Vec<Result<Vec<ExperimentRecord>>>) -> Result<ExperimentResult> {
    let mut records = Vec::new();
    for c in chunks {
        records.extend(c?);
    }
    Ok(ExperimentResult { records })
}

/// Synthetic protocol: fresh train and test samples per repetition and
/// training size.
pub fn run_synthetic(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let problem = config.synthetic_problem()?;
    if config.n_train.is_empty() {
        return Err(Error::InvalidParameter("n_train list is empty".into()));
    }
    if let Some(&n) = config.n_train.iter().find(|&&n| n % 2 != 0 || n < config.folds) {
        return Err(Error::InvalidParameter(format!(
            "training size {n} must be even and at least the fold count {}",
            config.folds
        )));
    }
    if config.n_test < 2 || !config.n_test.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "n_test must be even and positive, got {}",
            config.n_test
        )));
    }
    let settings = PipelineSettings::from(config);
    let tasks: Vec<(usize, usize)> = config
        .n_train
        .iter()
        .flat_map(|&n| (0..config.repetitions).map(move |rep| (n, rep)))
        .collect();
    let chunks = tasks
        .par_iter()
        .map(|&(n_train, rep)| {
            let train = generate_problem(
                &problem,
                n_train,
                derive_seed(config.seed, rep, SeedPurpose::Train, n_train),
            )?;
            let test = generate_problem(
                &problem,
                config.n_test,
                derive_seed(config.seed, rep, SeedPurpose::Test, n_train),
            )?;
            evaluate_split(config, &settings, &train, &test, rep, n_train)
        })
        .collect();
    collect_ordered(chunks)
}

/// Loads `config.dataset` and applies the preprocessing chain.
pub fn load_real_dataset(config: &ExperimentConfig) -> Result<FunctionalDataset<f64>> {
    let path = config
        .dataset
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("real-data protocol needs a 'dataset' path".into()))?;
    let data = load_dataset(path, &config.schema())?;
    let data = config.preprocess_dataset(&data)?;
    data.require_both_classes()?;
    Ok(data)
}

/// Real-data protocol: repeated stratified train/test splits of one dataset.
/// `n_train` in the records is the realized training size.
pub fn run_real(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let data = load_real_dataset(config)?;
    run_real_on(config, &data)
}

/// [`run_real`] on an already loaded and preprocessed dataset.
pub fn run_real_on(config: &ExperimentConfig, data: &FunctionalDataset<f64>) -> Result<ExperimentResult> {
    config.validate()?;
    let settings = PipelineSettings::from(config);
    // fail before any work if a split is impossible
    stratified_split(data, config.train_fraction, config.seed)?;
    let chunks = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| {
            let split = stratified_split(
                data,
                config.train_fraction,
                derive_seed(config.seed, rep, SeedPurpose::Split, 0),
            )?;
            evaluate_split(config, &settings, &split.train, &split.test, rep, split.train.n_rows())
        })
        .collect();
    collect_ordered(chunks)
}

/// Test errors of Fisher's discriminant restricted to given time points,
/// one per repetition. `times` picks the variables of each repetition.
pub fn lda_errors<F>(
    problem: &SyntheticProblem<f64>,
    n_train: usize,
    n_test: usize,
    repetitions: usize,
    seed: u64,
    times: F,
) -> Result<Vec<f64>>
where
    F: Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync,
{
    (0..repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, rep, SeedPurpose::Variables, n_train));
            let t = times(&mut rng);
            let train = generate_problem(problem, n_train, derive_seed(seed, rep, SeedPurpose::Train, n_train))?;
            let test = generate_problem(problem, n_test, derive_seed(seed, rep, SeedPurpose::Test, n_train))?;
            let model = fisher_lda_fit(&reduce_to_times(&train, &t)?)?;
            let x = reduce_to_times(&test, &t)?;
            error_rate(&model.predict(&x.features)?, test.labels())
        })
        .collect()
}
