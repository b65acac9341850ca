mod common;

use coldpref::experiment::{
    aggregate_runs, build_test_set, oracle_seed, practical_limit, run_policy, run_scenario,
    LimitConfig, PolicyKind, ScenarioConfig,
};
use coldpref::pair_model::{LearnerConfig, PairEnsemble};
use coldpref::sampler::PairPool;
use coldpref::seeding;
use coldpref::tabular_prep::{
    generate_synthetic, generate_synthetic_with, prepare, PrepOptions, PreparedDataset, RawTable,
    SyntheticConfig,
};
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Least-squares fit of `y` on `[1, X]`; returns fitted values.
fn ols_fit(ds: &PreparedDataset) -> Vec<f64> {
    let (n, p) = (ds.n(), ds.p());
    let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { ds.row(i)[j - 1] });
    let y = DVector::from_column_slice(ds.y());
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .expect("least squares");
    (design * coef).iter().copied().collect()
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn synthetic_target_is_nearly_linear() {
    let ds = generate_synthetic(2000, 10, 0.1, 7).unwrap();
    let fit = ols_fit(&ds);
    assert!(correlation(&fit, ds.y()) > 0.99);
}

#[test]
fn noiseless_synthetic_lies_in_column_space() {
    for share in [0.0, 0.5] {
        let ds = generate_synthetic_with(&SyntheticConfig {
            factor_share: share,
            ..SyntheticConfig::new(300, 6, 0.0, 3)
        })
        .unwrap();
        let fit = ols_fit(&ds);
        let worst = fit
            .iter()
            .zip(ds.y())
            .map(|(f, y)| (f - y).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "share {share}: residual {worst}");
    }
}

#[test]
fn constant_scores_select_uniformly() {
    // Five rows give ten pairs; with factor 20 every pair is a candidate.
    let ds = generate_synthetic(10, 2, 0.1, 1).unwrap();
    let small = PreparedDataset::new(
        ds.x()[..10].to_vec(),
        5,
        2,
        ds.y()[..5].to_vec(),
        ds.feature_names().to_vec(),
    )
    .unwrap();
    let model = PairEnsemble::blank(LearnerConfig::default(), 4);
    let trials = 20_000;
    let mut counts = [0usize; 10];
    let index = |u: usize, v: usize| {
        let (a, b) = (u.min(v), u.max(v));
        (0..a).map(|i| 4 - i).sum::<usize>() + (b - a - 1)
    };
    for seed in 0..trials {
        let mut pool = PairPool::new(5, 20).unwrap();
        let batch = pool
            .sample_uncertain(1, &model, &small, &mut seeding::seeded(seed))
            .unwrap();
        let (u, v) = batch.pairs[0];
        counts[index(u, v)] += 1;
    }
    let expected = trials as f64 / 10.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let critical = ChiSquared::new(9.0).unwrap().inverse_cdf(0.999);
    assert!(chi2 < critical, "chi2 {chi2} counts {counts:?}");
}

fn tiny_scenario() -> ScenarioConfig {
    let mut s = ScenarioConfig::low_data(4);
    s.max_queries = 200;
    s.n_runs = 2;
    s.n_test = 500;
    s.warmup.k = 2.0;
    s.learner.rounds_warmup = 30;
    s.master_seed = 99;
    s
}

#[test]
fn budget_accounting_and_isolation() {
    let ds = generate_synthetic(80, 4, 0.1, 5).unwrap();
    let s = tiny_scenario();
    let ts = build_test_set(&ds, s.n_test, 1).unwrap();
    for policy in PolicyKind::ALL {
        for run in 0..2 {
            let out = run_policy(policy, "syn", &ds, &ts, &s, run).unwrap();
            // Warm-up labels come from PCA; the oracle sees only the loop.
            assert_eq!(out.oracle_queries, 200);
            let q: Vec<usize> = out.rows.iter().map(|r| r.queries).collect();
            assert_eq!(q, vec![50, 100, 150, 200]);
        }
    }
    assert_eq!(oracle_seed(s.master_seed, 1), oracle_seed(s.master_seed, 1));
    assert_ne!(oracle_seed(s.master_seed, 0), oracle_seed(s.master_seed, 1));
}

#[test]
fn scenario_output_is_independent_of_workers() {
    let ds = generate_synthetic(80, 4, 0.1, 5).unwrap();
    let s = tiny_scenario();
    let one = run_scenario("syn", &ds, &s, &PolicyKind::ALL, 1).unwrap();
    let three = run_scenario("syn", &ds, &s, &PolicyKind::ALL, 3).unwrap();
    assert_eq!(one, three);
    assert_eq!(one.rows.len(), 3 * 2 * 4);
    assert_eq!(one.warmups.len(), 2);
    let agg = aggregate_runs(&one.rows).unwrap();
    assert_eq!(agg.len(), 3 * 4);
    assert!(agg.iter().all(|a| a.n_runs == 2));
}

#[test]
fn shared_warmup_and_disjoint_test_pairs() {
    let ds = generate_synthetic(80, 4, 0.1, 5).unwrap();
    let mut s = tiny_scenario();
    s.reuse_warmup = true;
    s.disjoint_test_pairs = true;
    let out = run_scenario("syn", &ds, &s, &[PolicyKind::ColdstartPretrained], 1).unwrap();
    assert_eq!(out.warmups[0].1, out.warmups[1].1);
}

#[test]
fn limit_scales_down_on_small_pools() {
    let ds = generate_synthetic(30, 3, 0.1, 8).unwrap();
    let mut s = ScenarioConfig::low_data(3);
    s.learner.rounds_warmup = 20;
    let ts = build_test_set(&ds, 100, 2).unwrap();
    let out = practical_limit(&ds, &ts, &s, &LimitConfig::default()).unwrap();
    // 435 pairs over 100 batches.
    assert_eq!(out.batch_size, 4);
    assert_eq!(out.pairs_used, 400);
    assert!((0.0..=1.0).contains(&out.f1));
}

#[test]
fn csv_to_experiment() {
    let mut csv = String::from("size,color,age,price\n");
    for i in 0..60 {
        let color = ["red", "green", "blue"][i % 3];
        let age = if i % 7 == 0 { String::new() } else { (i % 11).to_string() };
        csv.push_str(&format!("{},{color},{age},{}\n", i as f64 * 1.5, 100.0 + i as f64));
    }
    let table = RawTable::from_csv(csv.as_bytes(), "price").unwrap();
    let ds = prepare(table, &PrepOptions::default()).unwrap();
    assert_eq!(ds.n(), 60);
    assert_eq!(ds.p(), 5);
    let mut s = tiny_scenario();
    s.learner = LearnerConfig {
        rounds_warmup: 20,
        ..LearnerConfig::for_columns(ds.p())
    };
    s.n_runs = 1;
    let out = run_scenario("toy", &ds, &s, &PolicyKind::ALL, 1).unwrap();
    assert!(out.rows.iter().all(|r| (0.0..=1.0).contains(&r.f1)));
}
