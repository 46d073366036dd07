use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rmh::correction::IntervalNode;
use rmh::depmeasure::{relevance_curve, DcovMethod};
use rmh::fdata::{FunctionalDataset, Grid};
use rmh::selectors::{
    maxima_hunting_select_with, reduce_dataset, redundancy_bounds, rmh_select, rmh_select_with, SelectionResult,
};
use rmh::synth::{generate_problem, SyntheticProblem};

/// Small dataset with a random piecewise trend on class 1 and random
/// smoothness, so selections range from empty to many points.
fn random_case(rng: &mut ChaCha8Rng) -> FunctionalDataset<f64> {
    let n = rng.random_range(6..=30);
    let p: usize = rng.random_range(2..=25);
    let walk = rng.random_bool(0.5);
    let bump = rng.random_range(0..p);
    let height: f64 = rng.random_range(0.0..3.0);
    let mut labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    labels.rotate_left(rng.random_range(0..n));
    let rows = labels
        .iter()
        .map(|&l| {
            let mut acc = 0.0;
            (0..p)
                .map(|j| {
                    let e: f64 = rng.sample(StandardNormal);
                    acc = if walk { acc + e } else { e };
                    acc + if l == 1 && j.abs_diff(bump) <= 1 { height } else { 0.0 }
                })
                .collect()
        })
        .collect();
    FunctionalDataset::new(Grid::right_endpoints(p).unwrap(), rows, labels).unwrap()
}

fn check_postconditions(sel: &SelectionResult<f64>, data: &FunctionalDataset<f64>, s: f64) {
    let p = data.n_points();
    assert!(sel.len() <= p);
    let mut seen = sel.indices.clone();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), sel.len(), "duplicate selection");
    for (i, &idx) in sel.indices.iter().enumerate() {
        assert!(idx < p);
        assert_eq!(sel.times[i], data.grid().get(idx));
        assert!(sel.relevances[i] > s && sel.relevances[i] <= 1.0 + 1e-12);
        if let Some(parent) = sel.parents[i] {
            assert!(parent < i);
        } else {
            assert_eq!(i, 0, "only the first selection is a root");
        }
    }
}

#[test]
fn rmh_terminates_and_respects_thresholds() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut nonempty = 0;
    for _ in 0..1000 {
        let d = random_case(&mut rng);
        let r = rng.random_range(0.3..0.95);
        let s = rng.random_range(0.01..0.4);
        let sel = rmh_select(&d, r, s).unwrap();
        check_postconditions(&sel, &d, s);
        nonempty += usize::from(!sel.is_empty());

        // classifier inputs are the original columns
        let red = reduce_dataset(&d, &sel).unwrap();
        for (k, &idx) in sel.indices.iter().enumerate() {
            for i in 0..d.n_rows() {
                assert_eq!(red.row(i)[k], d.value(i, idx));
            }
        }

        // stricter thresholds give the prefix-closed subtree
        let s2 = (s + rng.random_range(0.0..0.4)).min(0.99);
        let direct = rmh_select(&d, r, s2).unwrap();
        let derived = sel.with_relevance_threshold(s2).unwrap();
        assert_eq!(direct.indices, derived.indices);
        assert_eq!(direct.parents, derived.parents);
        assert!(direct.indices.iter().all(|i| sel.indices.contains(i)));
    }
    assert!(nonempty > 100 && nonempty < 1000, "degenerate sweep: {nonempty}");
}

#[test]
fn mh_single_maximum_on_peak() {
    let p: SyntheticProblem<f64> = SyntheticProblem::named("peak").unwrap();
    let target = p.grid.index_of(0.625).unwrap();
    let hits = (0..100)
        .filter(|&seed| {
            let d = generate_problem(&p, 1000, 5000 + seed).unwrap();
            let sel = maxima_hunting_select_with(&d, 1, DcovMethod::Fast).unwrap();
            sel.indices[0].abs_diff(target) <= 1
        })
        .count();
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn rmh_null_problem_selects_little() {
    let p: SyntheticProblem<f64> = SyntheticProblem::named("zero").unwrap();
    let ok = (0..40)
        .filter(|&seed| {
            let d = generate_problem(&p, 1000, 700 + seed).unwrap();
            rmh_select_with(&d, 0.8, 0.1, DcovMethod::Fast).unwrap().len() <= 1
        })
        .count();
    assert!(ok >= 38, "{ok}/40");
}

#[test]
fn threshold_above_curve_gives_empty_selection() {
    let p: SyntheticProblem<f64> = SyntheticProblem::named("peak").unwrap();
    let d = generate_problem(&p, 100, 1).unwrap();
    let max = relevance_curve(&d).unwrap().values.into_iter().fold(0.0, f64::max);
    assert!(max < 0.99);
    assert!(rmh_select(&d, 0.8, max).unwrap().is_empty());
}

#[test]
fn redundancy_zone_on_independent_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = Grid::right_endpoints(9).unwrap();
    let rows: Vec<Vec<f64>> = (0..400)
        .map(|_| (0..9).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let labels = (0..400).map(|i| (i % 2) as u8).collect();
    let d = FunctionalDataset::new(g.clone(), rows, labels).unwrap();
    let node = IntervalNode::root(&g);
    let (m, p) = redundancy_bounds(&d, &node, g.get(4), 0.8).unwrap();
    assert_eq!((m, p), (Some(g.get(3)), Some(g.get(5))));
}

#[test]
fn redundancy_zone_shrinks_as_r_grows() {
    let p: SyntheticProblem<f64> = SyntheticProblem::named("zero").unwrap();
    let d = generate_problem(&p, 300, 2).unwrap();
    let node = IntervalNode::root(d.grid());
    let t = d.grid().get(99);
    let mut last_width = usize::MAX;
    for r in [0.5, 0.7, 0.8, 0.9, 0.97, 0.995] {
        let (m, p) = redundancy_bounds(&d, &node, t, r).unwrap();
        let lo = m.map_or(0, |v| d.grid().index_of(v).unwrap());
        let hi = p.map_or(199, |v| d.grid().index_of(v).unwrap());
        let width = hi - lo;
        assert!(width <= last_width, "r={r}: {width} > {last_width}");
        last_width = width;
    }
    assert!(last_width <= 4);

    let g = Grid::right_endpoints(5).unwrap();
    let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![f64::from(i * i % 5); 5]).collect();
    let same = FunctionalDataset::new(g.clone(), rows, vec![0, 1, 0, 1, 0, 1, 0, 1]).unwrap();
    assert_eq!(
        redundancy_bounds(&same, &IntervalNode::root(&g), g.get(2), 0.8).unwrap(),
        (None, None)
    );
}
