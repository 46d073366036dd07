use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::FunctionalDataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Disjoint train/test partition of one dataset.
#[derive(Debug, Clone)]
pub struct SplitPair<T> {
    pub train: FunctionalDataset<T>,
    pub test: FunctionalDataset<T>,
    /// Source row of every train row.
    pub train_rows: Vec<usize>,
    /// Source row of every test row.
    pub test_rows: Vec<usize>,
}

fn class_indices(labels: &[u8]) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        out[l as usize].push(i);
    }
    out
}

/// Random partition preserving the class proportions: each class
/// contributes `round(train_fraction * n_c)` rows (clamped to leave at least
/// one row on each side) to the training set.
pub fn stratified_split<T: Scalar>(
    data: &FunctionalDataset<T>,
    train_fraction: f64,
    seed: u64,
) -> Result<SplitPair<T>> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for (class, mut idx) in class_indices(data.labels()).into_iter().enumerate() {
        if idx.len() < 2 {
            return Err(Error::TooFewInstances(format!(
                "class {class} has {} member(s), need at least 2",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let n_c = idx.len();
        let k = ((train_fraction * n_c as f64).round() as usize).clamp(1, n_c - 1);
        train_rows.extend_from_slice(&idx[..k]);
        test_rows.extend_from_slice(&idx[k..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok(SplitPair {
        train: data.select_rows(&train_rows),
        test: data.select_rows(&test_rows),
        train_rows,
        test_rows,
    })
}

/// Stratified fold assignment: `assignment[i]` is the fold of row `i`.
///
/// Rows of each class are shuffled and dealt round-robin, continuing the
/// deal across classes so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[u8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {folds}")));
    }
    if labels.len() < folds {
        return Err(Error::TooFewInstances(format!(
            "{} instances for {folds}-fold cross-validation",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for mut idx in class_indices(labels) {
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}
