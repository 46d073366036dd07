mod common;

use common::{jacobi_eigen, normal_matrix, random_dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rmh::classify::knn_classify;
use rmh::fdata::{FunctionalDataset, Grid};
use rmh::reducers::{pca_fit, pls_fit, select_components_cv, KnnPolicy, ProjectionKind};

fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let p = rows[0].len();
    let mean: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    (0..p)
        .map(|a| {
            (0..p)
                .map(|b| rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n - 1.0))
                .collect()
        })
        .collect()
}

#[test]
fn pca_matches_jacobi_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let scale = [3.0, 2.0, 1.5, 1.0, 0.5];
    let rows: Vec<Vec<f64>> = normal_matrix(&mut rng, 20, 5)
        .into_iter()
        .map(|r| r.iter().zip(&scale).map(|(v, s)| v * s).collect())
        .collect();
    let d = FunctionalDataset::new(Grid::linspace(5).unwrap(), rows.clone(), [0, 1].repeat(10)).unwrap();
    let (vals, vecs) = jacobi_eigen(covariance(&rows));
    let mut order: Vec<usize> = (0..5).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));

    let m = pca_fit(&d, 4).unwrap();
    let scores = m.transform(&d).unwrap();
    for (c, &src) in order.iter().take(4).enumerate() {
        assert!((m.variances[c] - vals[src]).abs() <= 1e-8);
        let dir: Vec<f64> = (0..5).map(|j| vecs[j][src]).collect();
        let sign = if dir
            .iter()
            .zip(m.directions.column(c).iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            < 0.0
        {
            -1.0
        } else {
            1.0
        };
        for (i, row) in rows.iter().enumerate() {
            let want: f64 = (0..5).map(|j| (row[j] - m.mean[j]) * dir[j] * sign).sum();
            assert!((scores.row(i)[c] - want).abs() <= 1e-8);
        }
    }
    // orthonormal directions
    let gram = m.directions.transpose() * &m.directions;
    for a in 0..4 {
        for b in 0..4 {
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((gram[(a, b)] - want).abs() <= 1e-8);
        }
    }
}

#[test]
fn pca_scores_are_uncorrelated() {
    let d = random_dataset(60, 12, 3);
    let m = pca_fit(&d, 6).unwrap();
    let s = m.transform(&d).unwrap();
    let rows: Vec<Vec<f64>> = (0..60).map(|i| s.row(i).to_vec()).collect();
    let cov = covariance(&rows);
    for (a, row) in cov.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            if a != b {
                assert!(v.abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn pls_and_pca_share_the_first_direction_when_labels_are_linear_in_it() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = 6;
    let v1 = [0.5, 0.5, 0.5, 0.5, 0.0, 0.0];
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..25 {
        // noise in the orthogonal complement, shared by one row of each class
        let mut e: Vec<f64> = (0..p).map(|_| 0.3 * rng.sample::<f64, _>(StandardNormal)).collect();
        let proj: f64 = e.iter().zip(&v1).map(|(a, b)| a * b).sum();
        e.iter_mut().zip(&v1).for_each(|(a, b)| *a -= proj * b);
        for l in [0u8, 1] {
            let a = 2.0 * f64::from(l) - 1.0;
            rows.push(e.iter().zip(&v1).map(|(x, v)| x + a * v).collect());
            labels.push(l);
        }
    }
    let d = FunctionalDataset::new(Grid::linspace(p).unwrap(), rows, labels).unwrap();
    let pca = pca_fit(&d, 1).unwrap();
    let pls = pls_fit(&d, 1).unwrap();
    let a: Vec<f64> = pca.directions.column(0).iter().copied().collect();
    let b: Vec<f64> = pls.directions.column(0).iter().copied().collect();
    let cos = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>()
        / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt());
    let angle = cos.abs().min(1.0).acos();
    assert!(angle <= 1e-6, "angle {angle}");
}

#[test]
fn one_component_truth_is_recovered() {
    let mut hits = 0;
    for run in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + run);
        let scale = [3.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let rows: Vec<Vec<f64>> = normal_matrix(&mut rng, 100, 6)
            .into_iter()
            .map(|r| r.iter().zip(&scale).map(|(v, s)| v * s).collect())
            .collect();
        let unlabeled = FunctionalDataset::new(Grid::linspace(6).unwrap(), rows.clone(), [0, 1].repeat(50)).unwrap();
        let pc = pca_fit(&unlabeled, 1).unwrap().transform(&unlabeled).unwrap();
        let labels = (0..100).map(|i| u8::from(pc.row(i)[0] > 0.0)).collect();
        let d = FunctionalDataset::new(Grid::linspace(6).unwrap(), rows, labels).unwrap();
        let c = select_components_cv(&d, ProjectionKind::Pca, 10, 30, KnnPolicy::CrossValidated, run).unwrap();
        hits += usize::from(c.value == 1);
    }
    assert!(hits >= 90, "{hits}/100");
}

#[test]
fn null_response_gives_chance_error() {
    let mut errors = Vec::new();
    let mut small = 0;
    for run in 0..20 {
        let train = random_dataset(200, 20, 300 + run);
        let test = random_dataset(200, 20, 900 + run);
        let c = select_components_cv(&train, ProjectionKind::Pls, 10, 30, KnnPolicy::CrossValidated, run).unwrap();
        small += usize::from(c.value <= 10);
        let m = pls_fit(&train, c.value).unwrap();
        let pred = knn_classify(
            &m.transform(&train).unwrap(),
            &m.transform(&test).unwrap().features,
            c.k,
        )
        .unwrap();
        errors.push(rmh::error_rate(&pred, test.labels()).unwrap());
    }
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    assert!((mean - 0.5).abs() <= 0.05, "mean null error {mean}");
    assert!(small >= 14, "{small}/20 runs chose c <= 10");
}

#[test]
fn projection_ignores_test_labels() {
    let train = random_dataset(40, 8, 1);
    let test = random_dataset(30, 8, 2);
    let mut flipped = test.labels().to_vec();
    flipped.reverse();
    let test2 =
        FunctionalDataset::new(test.grid().clone(), test.rows().map(<[f64]>::to_vec).collect(), flipped).unwrap();
    for m in [pca_fit(&train, 3).unwrap(), pls_fit(&train, 3).unwrap()] {
        assert_eq!(
            m.transform(&test).unwrap().features,
            m.transform(&test2).unwrap().features
        );
    }
}

#[test]
fn cv_determinism_and_errors() {
    let d = random_dataset(50, 10, 5);
    for kind in [ProjectionKind::Pca, ProjectionKind::Pls] {
        let a = select_components_cv(&d, kind, 10, 30, KnnPolicy::CrossValidated, 9).unwrap();
        let b = select_components_cv(&d, kind, 10, 30, KnnPolicy::CrossValidated, 9).unwrap();
        assert_eq!(a, b);
        assert!((1..=10).contains(&a.value));
        assert_eq!(
            select_components_cv(&d, kind, 10, 1, KnnPolicy::Fixed(1), 9)
                .unwrap()
                .value,
            1
        );
    }
    let tiny = random_dataset(6, 4, 1);
    assert!(select_components_cv(&tiny, ProjectionKind::Pca, 10, 3, KnnPolicy::Fixed(1), 0).is_err());
}
