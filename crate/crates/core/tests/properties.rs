mod common;

use coldpref::experiment::f1_score;
use coldpref::oracle_sim::{preference_prob, OracleMode, Positivity, TargetStats};
use coldpref::pair_model::{LearnerConfig, PairBatch, PairEnsemble, ScoreCache};
use coldpref::pca_warmup::{fit_first_component, pca_label, pretraining_size};
use coldpref::sampler::PairPool;
use coldpref::seeding;
use coldpref::tabular_prep::{prepare, standardize, PrepOptions, PreparedDataset, RawTable};
use proptest::prelude::*;

fn check_invariants(ds: &PreparedDataset) -> Result<(), TestCaseError> {
    prop_assert_eq!(ds.x().len(), ds.n() * ds.p());
    prop_assert_eq!(ds.y().len(), ds.n());
    prop_assert_eq!(ds.feature_names().len(), ds.p());
    prop_assert!(ds.x().iter().all(|v| v.is_finite()));
    for j in 0..ds.p() {
        let col: Vec<f64> = ds.column(j).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
        prop_assert!(mean.abs() < 1e-9, "column {} mean {}", j, mean);
        prop_assert!((var - 1.0).abs() < 1e-6, "column {} variance {}", j, var);
    }
    Ok(())
}

/// A CSV with one numeric column, one categorical column, optional gaps
/// and a numeric target.
fn table_csv() -> impl Strategy<Value = String> {
    let row = (
        prop::option::weighted(0.85, -100.0..100.0f64),
        prop::option::weighted(0.85, prop::sample::select(vec!["a", "b", "c", "d"])),
        prop::option::weighted(0.95, -5.0..5.0f64),
    );
    prop::collection::vec(row, 3..40).prop_map(|rows| {
        let mut s = String::from("num,cat,target\n");
        for (a, b, t) in rows {
            let a = a.map(|v| v.to_string()).unwrap_or_default();
            let b = b.unwrap_or("NA");
            let t = t.map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!("{a},{b},{t}\n"));
        }
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prepared_tables_satisfy_invariants(csv in table_csv()) {
        let table = RawTable::from_csv(csv.as_bytes(), "target").unwrap();
        if let Ok(ds) = prepare(table, &PrepOptions::default()) {
            check_invariants(&ds)?;
            let again = prepare(RawTable::from_csv(csv.as_bytes(), "target").unwrap(), &PrepOptions::default()).unwrap();
            prop_assert_eq!(ds.x(), again.x());
        }
    }

    #[test]
    fn standardization_is_idempotent(csv in table_csv()) {
        let table = RawTable::from_csv(csv.as_bytes(), "target").unwrap();
        if let Ok(ds) = prepare(table, &PrepOptions::default()) {
            let mut buf = Vec::new();
            ds.write_csv(&mut buf).unwrap();
            let raw = RawTable::from_csv(buf.as_slice(), "__target").unwrap();
            let twice = standardize(raw).unwrap();
            prop_assert_eq!(twice.p(), ds.p());
            for (a, b) in ds.x().iter().zip(twice.x()) {
                prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
            }
        }
    }

    #[test]
    fn pca_label_antisymmetry(a in -1e6..1e6f64, b in -1e6..1e6f64) {
        if a != b {
            prop_assert_eq!(pca_label(a, b), 1 - pca_label(b, a));
        } else {
            prop_assert_eq!(pca_label(a, b), 0);
        }
    }

    #[test]
    fn n_pre_monotone(
        n in 3usize..50_000,
        k in 1.0..100.0f64,
        alpha in 1e-7..1e-4f64,
        s in 0.0..1e5f64,
        bump in 0.0..1.0f64,
    ) {
        let base = pretraining_size(n, k, alpha, s);
        prop_assert!(pretraining_size(n, k, alpha, s * (1.0 + bump) + bump) <= base);
        prop_assert!(pretraining_size(n, k, (alpha * (1.0 + bump)).min(1e-4), s) <= base);
        prop_assert!(pretraining_size(n, (k * (1.0 + bump)).min(100.0), alpha, s) >= base);
        prop_assert!(pretraining_size(n + 1 + (bump * 100.0) as usize, k, alpha, s) >= base);
    }

    #[test]
    fn projection_is_optimal(seed in 0u64..1000, n in 3usize..80, p in 1usize..8) {
        let mut rng = common::rng(seed);
        let x = common::centered_matrix(&mut rng, n, p);
        let model = fit_first_component(&x, n, p).unwrap();
        let var_along = |u: &[f64]| -> f64 {
            x.chunks_exact(p).map(|row| common::dot(row, u).powi(2)).sum::<f64>() / n as f64
        };
        let best = var_along(&model.w);
        for _ in 0..20 {
            let mut u: Vec<f64> = (0..p).map(|_| rand::Rng::random::<f64>(&mut rng) - 0.5).collect();
            let norm = common::dot(&u, &u).sqrt();
            u.iter_mut().for_each(|v| *v /= norm);
            prop_assert!(var_along(&u) <= best + 1e-9);
        }
    }

    #[test]
    fn oracle_monotone_in_preferred_target(
        y_v in 0.1..10.0f64,
        y_u in 0.1..10.0f64,
        step in 1e-3..5.0f64,
        mode_idx in 0usize..3,
    ) {
        let stats = TargetStats { y_min: 0.1, y_max: 15.0, y_std: 2.0 };
        let mode = [
            OracleMode::Standard(Positivity::Identity),
            OracleMode::Standard(Positivity::MinMaxShift { delta: 0.01 }),
            OracleMode::Exponential { scale: None },
        ][mode_idx];
        let lo = preference_prob(y_u, y_v, mode, &stats).unwrap();
        let hi = preference_prob(y_u + step, y_v, mode, &stats).unwrap();
        prop_assert!(hi > lo, "{} !> {}", hi, lo);
    }

    #[test]
    fn exponential_oracle_shift_invariant(
        y_u in -50.0..50.0f64,
        y_v in -50.0..50.0f64,
        shift in -100.0..100.0f64,
        scale in 0.01..3.0f64,
    ) {
        let stats = TargetStats { y_min: -200.0, y_max: 200.0, y_std: 1.0 };
        let mode = OracleMode::Exponential { scale: Some(scale) };
        let a = preference_prob(y_u, y_v, mode, &stats).unwrap();
        // Shift the difference representation only through the sum.
        let b = preference_prob(y_u + shift, y_v + shift, mode, &stats).unwrap();
        prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn f1_matches_confusion_table(bits in prop::collection::vec((0u8..2, 0u8..2), 1..10_000)) {
        let (pred, truth): (Vec<u8>, Vec<u8>) = bits.into_iter().unzip();
        prop_assert_eq!(f1_score(&pred, &truth).unwrap(), common::brute_f1(&pred, &truth));
    }

    #[test]
    fn batches_are_distinct_and_sized(n in 2usize..40, n_b in 1usize..30, seed in 0u64..1000) {
        let mut pool = PairPool::new(n, 20).unwrap();
        let mut rng = seeding::seeded(seed);
        let mut seen = std::collections::HashSet::new();
        while pool.remaining() >= n_b as u64 {
            let batch = pool.sample_random(n_b, &mut rng).unwrap();
            prop_assert_eq!(batch.pairs.len(), n_b);
            for (u, v) in batch.pairs {
                prop_assert!(u != v && u < n && v < n);
                prop_assert!(seen.insert((u.min(v), u.max(v))));
                prop_assert!(pool.is_queried(u, v));
            }
        }
        prop_assert_eq!(seen.len(), pool.queried_count());
    }

    #[test]
    fn score_cache_tracks_raw_scores(seed in 0u64..200) {
        let mut rng = common::rng(seed);
        let dim = 4;
        let rows = 60;
        let feats: Vec<f64> = (0..rows * dim).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let labels: Vec<u8> = feats.chunks(dim).map(|r| u8::from(r[0] > r[2])).collect();
        let batch = PairBatch::new(dim, feats.clone(), labels).unwrap();
        let cfg = LearnerConfig { rounds_warmup: 15, rounds_increment: 5, max_depth: 2, ..LearnerConfig::default() };
        let (mut model, _) = PairEnsemble::fit_initial(&batch, cfg).unwrap();
        let mut cache = ScoreCache::new(&model, &feats).unwrap();
        for _ in 0..3 {
            model.update(&batch).unwrap();
            cache.refresh(&model, &feats);
        }
        for (i, z) in feats.chunks(dim).enumerate() {
            prop_assert_eq!(cache.raw()[i].to_bits(), model.raw_score(z).unwrap().to_bits());
        }
        let restored = PairEnsemble::from_bytes(&model.to_bytes()).unwrap();
        prop_assert_eq!(restored, model);
    }
}
