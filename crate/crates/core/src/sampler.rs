//! Query selection over the pool of unlabeled pairs.

use std::collections::HashSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::pair_model::PairEnsemble;
use crate::tabular_prep::PreparedDataset;

pub const DEFAULT_CANDIDATE_FACTOR: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplingStrategy {
    Random,
    Uncertainty,
}

/// Ordered pairs selected for labeling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryBatch {
    pub pairs: Vec<(usize, usize)>,
    pub strategy: SamplingStrategy,
}

fn key(u: usize, v: usize) -> (u32, u32) {
    if u < v {
        (u as u32, v as u32)
    } else {
        (v as u32, u as u32)
    }
}

/// All unordered pairs of `n` rows minus those already queried.
#[derive(Debug, Clone)]
pub struct PairPool {
    n: usize,
    excluded: HashSet<(u32, u32)>,
    candidate_pool_factor: usize,
}

impl PairPool {
    pub fn new(n: usize, candidate_pool_factor: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::DatasetTooSmall(n));
        }
        if n > u32::MAX as usize {
            return Err(Error::invalid("n", "too many rows for the pair pool"));
        }
        if candidate_pool_factor == 0 {
            return Err(Error::invalid("candidate_pool_factor", "must be positive"));
        }
        Ok(Self {
            n,
            excluded: HashSet::new(),
            candidate_pool_factor,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total_pairs(&self) -> u64 {
        let n = self.n as u64;
        n * (n - 1) / 2
    }

    pub fn remaining(&self) -> u64 {
        self.total_pairs() - self.excluded.len() as u64
    }

    pub fn is_queried(&self, u: usize, v: usize) -> bool {
        self.excluded.contains(&key(u, v))
    }

    pub fn queried_count(&self) -> usize {
        self.excluded.len()
    }

    /// Marks a pair as queried. Returns false if it already was.
    pub fn exclude(&mut self, u: usize, v: usize) -> Result<bool> {
        if u == v {
            return Err(Error::DegeneratePair(u));
        }
        for idx in [u, v] {
            if idx >= self.n {
                return Err(Error::IndexOutOfRange {
                    index: idx,
                    len: self.n,
                });
            }
        }
        Ok(self.excluded.insert(key(u, v)))
    }

    fn check_available(&self, requested: usize) -> Result<()> {
        let remaining = self.remaining();
        if requested as u64 > remaining {
            return Err(Error::PoolExhausted {
                requested,
                remaining,
            });
        }
        Ok(())
    }

    /// Draws `count` distinct unqueried unordered pairs uniformly, each with a
    /// fair-coin orientation. Does not mark them as queried.
    fn draw_unqueried<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<(usize, usize)> {
        let remaining = self.remaining();
        let mut chosen: Vec<(u32, u32)> = Vec::with_capacity(count);
        if remaining <= 4 * count as u64 {
            let mut all = Vec::with_capacity(remaining as usize);
            for u in 0..self.n as u32 {
                for v in u + 1..self.n as u32 {
                    if !self.excluded.contains(&(u, v)) {
                        all.push((u, v));
                    }
                }
            }
            for idx in rand::seq::index::sample(rng, all.len(), count) {
                chosen.push(all[idx]);
            }
        } else {
            let mut seen = HashSet::with_capacity(count);
            while chosen.len() < count {
                let u = rng.random_range(0..self.n);
                let mut v = rng.random_range(0..self.n - 1);
                if v >= u {
                    v += 1;
                }
                let k = key(u, v);
                if !self.excluded.contains(&k) && seen.insert(k) {
                    chosen.push(k);
                }
            }
        }
        chosen
            .into_iter()
            .map(|(a, b)| {
                if rng.random::<bool>() {
                    (a as usize, b as usize)
                } else {
                    (b as usize, a as usize)
                }
            })
            .collect()
    }

    fn commit(&mut self, pairs: &[(usize, usize)]) {
        for &(u, v) in pairs {
            let fresh = self.excluded.insert(key(u, v));
            debug_assert!(fresh, "pair ({u}, {v}) queried twice");
        }
    }

    /// Uniformly random batch of `n_b` unqueried pairs; marks them queried.
    pub fn sample_random<R: Rng + ?Sized>(&mut self, n_b: usize, rng: &mut R) -> Result<QueryBatch> {
        self.check_available(n_b)?;
        let pairs = self.draw_unqueried(n_b, rng);
        self.commit(&pairs);
        Ok(QueryBatch {
            pairs,
            strategy: SamplingStrategy::Random,
        })
    }

    /// Scores `candidate_pool_factor * n_b` random unqueried pairs by
    /// `1 - |2 p - 1|` under `model` and keeps the `n_b` most uncertain.
    pub fn sample_uncertain<R: Rng + ?Sized>(
        &mut self,
        n_b: usize,
        model: &PairEnsemble,
        dataset: &PreparedDataset,
        rng: &mut R,
    ) -> Result<QueryBatch> {
        let mut z = Vec::with_capacity(2 * dataset.p());
        self.sample_uncertain_by(n_b, rng, |u, v| {
            z.clear();
            dataset.pair_features_into(u, v, &mut z);
            model.predict_prob(&z)
        })
    }

    /// Uncertainty sampling with an arbitrary probability function.
    /// Candidates arrive in random order and the sort is stable, so ties are
    /// broken randomly.
    pub fn sample_uncertain_by<R, F>(&mut self, n_b: usize, rng: &mut R, mut prob: F) -> Result<QueryBatch>
    where
        R: Rng + ?Sized,
        F: FnMut(usize, usize) -> Result<f64>,
    {
        self.check_available(n_b)?;
        let pool_size = (self.candidate_pool_factor.saturating_mul(n_b) as u64).min(self.remaining()) as usize;
        let candidates = self.draw_unqueried(pool_size, rng);
        let mut scored = Vec::with_capacity(candidates.len());
        for (u, v) in candidates {
            scored.push((uncertainty(prob(u, v)?), (u, v)));
        }
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        let pairs: Vec<_> = scored.into_iter().take(n_b).map(|(_, p)| p).collect();
        self.commit(&pairs);
        Ok(QueryBatch {
            pairs,
            strategy: SamplingStrategy::Uncertainty,
        })
    }

    /// Candidate draw exposed for diagnostics and tests; nothing is marked.
    pub fn draw_candidates<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<(usize, usize)>> {
        self.check_available(count)?;
        Ok(self.draw_unqueried(count, rng))
    }
}

/// `1 - |2 p - 1|`: 1 at p = 0.5, 0 at p in {0, 1}.
pub fn uncertainty(prob: f64) -> f64 {
    1.0 - (2.0 * prob - 1.0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pair_model::LearnerConfig;
    use crate::seeding;

    #[test]
    fn exhaustive_small_pool() {
        let mut pool = PairPool::new(3, 20).unwrap();
        let mut rng = seeding::seeded(1);
        let batch = pool.sample_random(3, &mut rng).unwrap();
        let mut keys: Vec<_> = batch.pairs.iter().map(|&(u, v)| key(u, v)).collect();
        keys.sort();
        assert_eq!(keys, vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(pool.remaining(), 0);
        let err = pool.sample_random(1, &mut rng).unwrap_err();
        assert!(matches!(err, Error::PoolExhausted { remaining: 0, .. }));
    }

    #[test]
    fn seeded_order_is_reproducible() {
        let run = || {
            let mut pool = PairPool::new(3, 20).unwrap();
            pool.sample_random(3, &mut seeding::seeded(42)).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn all_excluded_errors() {
        let mut pool = PairPool::new(4, 20).unwrap();
        for u in 0..4 {
            for v in u + 1..4 {
                pool.exclude(u, v).unwrap();
            }
        }
        assert!(pool.sample_random(1, &mut seeding::seeded(0)).is_err());
    }

    #[test]
    fn batches_never_repeat_pairs() {
        let mut pool = PairPool::new(30, 20).unwrap();
        let mut rng = seeding::seeded(3);
        let mut seen = HashSet::new();
        while pool.remaining() >= 40 {
            let b = pool.sample_random(40, &mut rng).unwrap();
            assert_eq!(b.pairs.len(), 40);
            for (u, v) in b.pairs {
                assert_ne!(u, v);
                assert!(seen.insert(key(u, v)));
            }
        }
        assert_eq!(seen.len(), pool.queried_count());
    }

    #[test]
    fn uncertainty_measure() {
        assert_eq!(uncertainty(0.5), 1.0);
        assert!(uncertainty(0.9) < uncertainty(0.6));
        assert!((uncertainty(0.9) - uncertainty(0.1)).abs() < 1e-15);
    }

    #[test]
    fn uncertain_picks_the_coin_flip() {
        // Three rows, three unordered pairs with probabilities 0.5, 0.9, 0.1.
        let prob_of = |u: usize, v: usize| -> f64 {
            let p = match key(u, v) {
                (0, 1) => 0.5,
                (0, 2) => 0.9,
                _ => 0.1,
            };
            if u < v { p } else { 1.0 - p }
        };
        for seed in 0..20 {
            let mut pool = PairPool::new(3, 20).unwrap();
            let b = pool
                .sample_uncertain_by(1, &mut seeding::seeded(seed), |u, v| Ok(prob_of(u, v)))
                .unwrap();
            assert_eq!(key(b.pairs[0].0, b.pairs[0].1), (0, 1));
            assert!(pool.is_queried(0, 1));
            assert_eq!(pool.queried_count(), 1);
        }
    }

    #[test]
    fn blank_model_uncertainty_is_constant() {
        let ds = crate::tabular_prep::generate_synthetic(20, 2, 0.1, 1).unwrap();
        let model = PairEnsemble::blank(LearnerConfig::default(), 4);
        let mut pool = PairPool::new(20, 5).unwrap();
        let b = pool.sample_uncertain(10, &model, &ds, &mut seeding::seeded(2)).unwrap();
        assert_eq!(b.pairs.len(), 10);
        assert_eq!(pool.queried_count(), 10);
    }
}
