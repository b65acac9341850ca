//! Learning policies, the active loop and its evaluation protocol.
//!
//! Every run starts from either a blank ensemble or the PCA-pretrained one,
//! then alternates: select a batch of pairs, label it with the oracle, continue
//! training on that batch, record F1 on the fixed test set. Runs are
//! independent jobs keyed by `(master_seed, policy, run_index)` and may be
//! executed in parallel without changing any emitted number.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use log::{debug, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::oracle_sim::{Oracle, OracleConfig, OracleMode};
use crate::pair_model::{LearnerConfig, PairBatch, PairEnsemble, ScoreCache};
use crate::pca_warmup::{self, PcaModel, DEFAULT_EPSILON};
use crate::sampler::{PairPool, DEFAULT_CANDIDATE_FACTOR};
use crate::seeding::{self, derive_seed};
use crate::tabular_prep::PreparedDataset;

pub const DEFAULT_TEST_PAIRS: usize = 20_000;
pub const GRID_START: usize = 50;
pub const GRID_STEP: usize = 50;
pub const LOW_DATA_MAX_QUERIES: usize = 800;
pub const LOW_DATA_RUNS: usize = 40;
pub const EXTENDED_MAX_QUERIES: usize = 10_000;
pub const EXTENDED_RUNS: usize = 1;
pub const LIMIT_BATCH_SIZE: usize = 1_000;
pub const LIMIT_BATCHES: usize = 100;

pub const RESULTS_HEADER: [&str; 6] = ["dataset", "policy", "run", "seed", "queries", "f1"];
pub const AGGREGATE_HEADER: [&str; 6] = ["dataset", "policy", "queries", "f1_mean", "f1_std", "n_runs"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PolicyKind {
    RandomBlank,
    WarmstartUncertainty,
    ColdstartPretrained,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [
        PolicyKind::RandomBlank,
        PolicyKind::WarmstartUncertainty,
        PolicyKind::ColdstartPretrained,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::RandomBlank => "random_blank",
            PolicyKind::WarmstartUncertainty => "warmstart_uncertainty",
            PolicyKind::ColdstartPretrained => "coldstart_pretrained",
        }
    }

    pub fn uses_uncertainty(self) -> bool {
        !matches!(self, PolicyKind::RandomBlank)
    }

    pub fn pretrained(self) -> bool {
        matches!(self, PolicyKind::ColdstartPretrained)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                Error::invalid(
                    "policy",
                    format!(
                        "unknown policy `{s}`; valid: {}",
                        PolicyKind::ALL.map(PolicyKind::as_str).join(", ")
                    ),
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarmupParams {
    pub k: f64,
    pub alpha: f64,
    pub epsilon: f64,
}

impl Default for WarmupParams {
    fn default() -> Self {
        Self {
            k: 10.0,
            alpha: 1e-5,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Size of the first batch.
    pub start: usize,
    /// Size of every later batch.
    pub step: usize,
    pub max_queries: usize,
    pub n_runs: usize,
    pub warmup: WarmupParams,
    pub oracle: OracleMode,
    pub learner: LearnerConfig,
    pub master_seed: u64,
    pub n_test: usize,
    pub candidate_factor: usize,
    /// Pretrain once per dataset instead of once per run.
    pub reuse_warmup: bool,
    /// Keep test pairs out of the query pool.
    pub disjoint_test_pairs: bool,
}

impl ScenarioConfig {
    /// 50 to 800 queries in steps of 50, 40 runs.
    pub fn low_data(p_columns: usize) -> Self {
        Self {
            start: GRID_START,
            step: GRID_STEP,
            max_queries: LOW_DATA_MAX_QUERIES,
            n_runs: LOW_DATA_RUNS,
            warmup: WarmupParams::default(),
            oracle: OracleMode::default(),
            learner: LearnerConfig::for_columns(p_columns),
            master_seed: 0,
            n_test: DEFAULT_TEST_PAIRS,
            candidate_factor: DEFAULT_CANDIDATE_FACTOR,
            reuse_warmup: false,
            disjoint_test_pairs: false,
        }
    }

    /// 50 to 10,000 queries in steps of 50, a single run.
    pub fn extended(p_columns: usize) -> Self {
        Self {
            max_queries: EXTENDED_MAX_QUERIES,
            n_runs: EXTENDED_RUNS,
            ..Self::low_data(p_columns)
        }
    }

    /// Every problem found, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.start == 0 {
            out.push("start must be positive".to_string());
        }
        if self.step == 0 {
            out.push("step must be positive".to_string());
        }
        if self.max_queries < self.start {
            out.push(format!(
                "max_queries ({}) must be at least start ({})",
                self.max_queries, self.start
            ));
        } else if self.step > 0 && !(self.max_queries - self.start).is_multiple_of(self.step) {
            out.push(format!(
                "max_queries ({}) must equal start plus a multiple of step ({})",
                self.max_queries, self.step
            ));
        }
        if self.step > 0 && !self.max_queries.is_multiple_of(self.step) {
            out.push(format!(
                "max_queries ({}) must be a multiple of step ({})",
                self.max_queries, self.step
            ));
        }
        if self.n_runs == 0 {
            out.push("runs must be positive".to_string());
        }
        let (k_lo, k_hi) = pca_warmup::K_RANGE;
        if !(k_lo..=k_hi).contains(&self.warmup.k) {
            out.push(format!("warmup.k must lie in [1, 100], got {}", self.warmup.k));
        }
        let (a_lo, a_hi) = pca_warmup::ALPHA_RANGE;
        if !(a_lo..=a_hi).contains(&self.warmup.alpha) {
            out.push(format!(
                "warmup.alpha must lie in [1e-7, 1e-4], got {}",
                self.warmup.alpha
            ));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
        if !(self.warmup.epsilon > 0.0) {
            out.push("warmup.epsilon must be positive".to_string());
        }
        if let Err(e) = (OracleConfig {
            mode: self.oracle,
            rng_seed: 0,
        })
        .validate()
        {
            out.push(e.to_string());
        }
        if let Err(e) = self.learner.validate() {
            out.push(e.to_string());
        }
        if self.n_test == 0 {
            out.push("test_pairs must be positive".to_string());
        }
        if self.candidate_factor == 0 {
            out.push("sampler.candidate_factor must be positive".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid("scenario", problems.join("; ")))
        }
    }

    /// Cumulative query counts at which F1 is recorded.
    pub fn grid(&self) -> Vec<usize> {
        let mut g = vec![self.start];
        while *g.last().expect("nonempty") + self.step <= self.max_queries {
            let next = g.last().expect("nonempty") + self.step;
            g.push(next);
        }
        g
    }
}

/// Fixed evaluation pairs labeled noiselessly from the true targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    pairs: Vec<(usize, usize, u8)>,
    features: Vec<f64>,
}

impl TestSet {
    pub fn pairs(&self) -> &[(usize, usize, u8)] {
        &self.pairs
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> Vec<u8> {
        self.pairs.iter().map(|p| p.2).collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// F1 of the model's hard predictions on this set.
    pub fn f1(&self, model: &PairEnsemble) -> Result<f64> {
        let cache = ScoreCache::new(model, &self.features)?;
        f1_score(&cache.predictions(), &self.labels())
    }
}

/// Samples `n_test` distinct unordered pairs uniformly, orientation by fair
/// coin, label 1 iff `y_u > y_v`. Requests beyond `n(n-1)/2` are clamped.
pub fn build_test_set(dataset: &PreparedDataset, n_test: usize, seed: u64) -> Result<TestSet> {
    let pool = PairPool::new(dataset.n(), 1)?;
    let total = pool.total_pairs();
    let count = if n_test as u64 > total {
        warn!("requested {n_test} test pairs but only {total} exist; clamping");
        total as usize
    } else {
        n_test
    };
    let mut rng = seeding::seeded(seed);
    let drawn = pool.draw_candidates(count, &mut rng)?;
    let y = dataset.y();
    let pairs: Vec<_> = drawn
        .into_iter()
        .map(|(u, v)| (u, v, u8::from(y[u] > y[v])))
        .collect();
    let mut features = Vec::with_capacity(pairs.len() * 2 * dataset.p());
    for &(u, v, _) in &pairs {
        dataset.pair_features_into(u, v, &mut features);
    }
    Ok(TestSet { pairs, features })
}

/// F1 of the positive class; 0 when precision + recall is 0.
pub fn f1_score(predictions: &[u8], truths: &[u8]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::invalid(
            "predictions",
            format!(
                "length {} does not match truths length {}",
                predictions.len(),
                truths.len()
            ),
        ));
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput("no predictions".into()));
    }
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (&p, &t) in predictions.iter().zip(truths) {
        match (p == 1, t == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    // Harmonic mean of precision and recall without intermediate rounding.
    Ok((2 * tp) as f64 / (2 * tp + fp + fn_) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub dataset: String,
    pub policy: PolicyKind,
    pub run: usize,
    pub seed: u64,
    pub queries: usize,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarmupSummary {
    pub n_pre: u64,
    pub sigma_r2: f64,
    /// Test F1 of the pretrained model before any oracle query.
    pub pretrained_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub rows: Vec<CurveRow>,
    pub warmup: Option<WarmupSummary>,
    pub oracle_queries: u64,
}

/// Test F1 of the raw PCA ordering and of its reverse. The sign of the
/// component is not identifiable without labels, so both are reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationDiagnostics {
    pub f1_as_fitted: f64,
    pub f1_reversed: f64,
}

pub fn orientation_diagnostics(pca: &PcaModel, test_set: &TestSet) -> Result<OrientationDiagnostics> {
    let truths = test_set.labels();
    let t = &pca.scores;
    let fitted: Vec<u8> = test_set
        .pairs
        .iter()
        .map(|&(u, v, _)| pca_warmup::pca_label(t[u], t[v]))
        .collect();
    let reversed: Vec<u8> = test_set
        .pairs
        .iter()
        .map(|&(u, v, _)| pca_warmup::pca_label(-t[u], -t[v]))
        .collect();
    Ok(OrientationDiagnostics {
        f1_as_fitted: f1_score(&fitted, &truths)?,
        f1_reversed: f1_score(&reversed, &truths)?,
    })
}

/// Warm-up phase: PCA, pre-training plan, pseudo-labeled pairs and the
/// initial fit. Consumes no oracle queries.
pub fn pretrain(
    dataset: &PreparedDataset,
    params: &WarmupParams,
    learner: LearnerConfig,
    seed: u64,
) -> Result<(PairEnsemble, PcaModel, u64)> {
    let pca = pca_warmup::fit_dataset(dataset)?;
    let plan = pca_warmup::plan_warmup(&pca, dataset.n(), params.k, params.alpha, params.epsilon)?;
    let pairs = pca_warmup::sample_pseudo_pairs(&plan, &pca, seed)?;
    if pairs.is_empty() {
        return Ok((PairEnsemble::blank(learner, 2 * dataset.p()), pca, 0));
    }
    let batch = PairBatch::from_pairs(dataset, pairs.iter().map(|p| (p.u, p.v, p.label)));
    let (model, _) = PairEnsemble::fit_initial(&batch, learner)?;
    Ok((model, pca, plan.n_pre))
}

pub fn run_seed(master_seed: u64, policy: PolicyKind, run_index: usize) -> u64 {
    derive_seed(master_seed, &format!("run/{policy}/{run_index}"))
}

/// Oracle seed depends on the run only, so all policies of a run face the
/// same uniform draw at each query index.
pub fn oracle_seed(master_seed: u64, run_index: usize) -> u64 {
    derive_seed(master_seed, &format!("oracle/{run_index}"))
}

pub fn test_set_seed(master_seed: u64) -> u64 {
    derive_seed(master_seed, "test_set")
}

pub fn shared_warmup_seed(master_seed: u64) -> u64 {
    derive_seed(master_seed, "warmup/shared")
}

fn label_batch(
    oracle: &mut Oracle,
    dataset: &PreparedDataset,
    pairs: &[(usize, usize)],
) -> Result<PairBatch> {
    let mut labeled = Vec::with_capacity(pairs.len());
    for &(u, v) in pairs {
        labeled.push((u, v, oracle.label_pair(u, v, dataset)?.label));
    }
    Ok(PairBatch::from_pairs(dataset, labeled))
}

fn new_pool(dataset: &PreparedDataset, test_set: &TestSet, scenario: &ScenarioConfig) -> Result<PairPool> {
    let mut pool = PairPool::new(dataset.n(), scenario.candidate_factor)?;
    if scenario.disjoint_test_pairs {
        for &(u, v, _) in test_set.pairs() {
            pool.exclude(u, v)?;
        }
    }
    Ok(pool)
}

/// One run of one policy over the scenario grid.
pub fn run_policy(
    policy: PolicyKind,
    dataset_id: &str,
    dataset: &PreparedDataset,
    test_set: &TestSet,
    scenario: &ScenarioConfig,
    run_index: usize,
) -> Result<RunOutcome> {
    run_policy_with(policy, dataset_id, dataset, test_set, scenario, run_index, None)
}

fn run_policy_with(
    policy: PolicyKind,
    dataset_id: &str,
    dataset: &PreparedDataset,
    test_set: &TestSet,
    scenario: &ScenarioConfig,
    run_index: usize,
    shared: Option<&(PairEnsemble, PcaModel, u64)>,
) -> Result<RunOutcome> {
    scenario.validate()?;
    let seed = run_seed(scenario.master_seed, policy, run_index);
    let dim = 2 * dataset.p();
    let truths = test_set.labels();

    let mut warmup = None;
    let mut model = if policy.pretrained() {
        let (model, pca, n_pre) = match shared {
            Some(s) => s.clone(),
            None => pretrain(
                dataset,
                &scenario.warmup,
                scenario.learner,
                derive_seed(seed, "warmup"),
            )?,
        };
        warmup = Some(WarmupSummary {
            n_pre,
            sigma_r2: pca.sigma_r2,
            pretrained_f1: 0.0,
        });
        model
    } else {
        PairEnsemble::blank(scenario.learner, dim)
    };
    let mut cache = ScoreCache::new(&model, test_set.features())?;
    if let Some(w) = &mut warmup {
        w.pretrained_f1 = f1_score(&cache.predictions(), &truths)?;
    }

    let mut pool = new_pool(dataset, test_set, scenario)?;
    let mut sampler_rng = seeding::stream(seed, "sampler");
    let mut oracle = Oracle::new(
        &OracleConfig {
            mode: scenario.oracle,
            rng_seed: oracle_seed(scenario.master_seed, run_index),
        },
        dataset,
    )?;

    let grid = scenario.grid();
    let mut rows = Vec::with_capacity(grid.len());
    let mut done = 0;
    for &target in &grid {
        let n_b = target - done;
        let batch = if policy.uses_uncertainty() {
            pool.sample_uncertain(n_b, &model, dataset, &mut sampler_rng)?
        } else {
            pool.sample_random(n_b, &mut sampler_rng)?
        };
        let labeled = label_batch(&mut oracle, dataset, &batch.pairs)?;
        model.update(&labeled)?;
        done = target;
        debug_assert_eq!(oracle.queries(), done as u64);
        cache.refresh(&model, test_set.features());
        let f1 = f1_score(&cache.predictions(), &truths)?;
        debug!("{dataset_id} {policy} run {run_index}: {done} queries, f1 {f1:.4}");
        rows.push(CurveRow {
            dataset: dataset_id.to_string(),
            policy,
            run: run_index,
            seed,
            queries: done,
            f1,
        });
    }
    Ok(RunOutcome {
        rows,
        warmup,
        oracle_queries: oracle.queries(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    /// Sorted by dataset, policy name, run, queries.
    pub rows: Vec<CurveRow>,
    pub orientation: OrientationDiagnostics,
    /// Warm-up summaries of the pretrained runs, by run index.
    pub warmups: Vec<(usize, WarmupSummary)>,
}

pub fn sort_rows(rows: &mut [CurveRow]) {
    rows.sort_by(|a, b| {
        (a.dataset.as_str(), a.policy.as_str(), a.run, a.queries).cmp(&(
            b.dataset.as_str(),
            b.policy.as_str(),
            b.run,
            b.queries,
        ))
    });
}

/// Runs every `(policy, run)` job of a scenario on a pool of `jobs` worker
/// threads. Output does not depend on `jobs`.
pub fn run_scenario(
    dataset_id: &str,
    dataset: &PreparedDataset,
    scenario: &ScenarioConfig,
    policies: &[PolicyKind],
    jobs: usize,
) -> Result<ScenarioOutcome> {
    scenario.validate()?;
    let test_set = build_test_set(dataset, scenario.n_test, test_set_seed(scenario.master_seed))?;
    let pca = pca_warmup::fit_dataset(dataset)?;
    let orientation = orientation_diagnostics(&pca, &test_set)?;
    let shared = if scenario.reuse_warmup && policies.iter().any(|p| p.pretrained()) {
        Some(pretrain(
            dataset,
            &scenario.warmup,
            scenario.learner,
            shared_warmup_seed(scenario.master_seed),
        )?)
    } else {
        None
    };

    let tasks: Vec<(PolicyKind, usize)> = policies
        .iter()
        .flat_map(|&p| (0..scenario.n_runs).map(move |r| (p, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid("jobs", e.to_string()))?;
    let outcomes: Vec<(PolicyKind, usize, RunOutcome)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(policy, run)| {
                run_policy_with(policy, dataset_id, dataset, &test_set, scenario, run, shared.as_ref())
                    .map(|o| (policy, run, o))
            })
            .collect::<Result<_>>()
    })?;

    let mut rows = Vec::new();
    let mut warmups = Vec::new();
    for (_, run, outcome) in outcomes {
        if let Some(w) = outcome.warmup {
            warmups.push((run, w));
        }
        rows.extend(outcome.rows);
    }
    sort_rows(&mut rows);
    warmups.sort_by_key(|(run, _)| *run);
    Ok(ScenarioOutcome {
        rows,
        orientation,
        warmups,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LimitConfig {
    pub batch_size: usize,
    /// Total batches, the first one random.
    pub n_batches: usize,
}

impl Default for LimitConfig {
    fn default() -> Self {
        Self {
            batch_size: LIMIT_BATCH_SIZE,
            n_batches: LIMIT_BATCHES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitOutcome {
    pub f1: f64,
    pub batch_size: usize,
    pub n_batches: usize,
    pub pairs_used: u64,
}

/// Practical performance limit: a model fitted on one random batch and then
/// refined on `n_batches - 1` uncertainty-selected batches. When the pool is
/// too small, the batch size shrinks proportionally.
pub fn practical_limit(
    dataset: &PreparedDataset,
    test_set: &TestSet,
    scenario: &ScenarioConfig,
    limit: &LimitConfig,
) -> Result<LimitOutcome> {
    if limit.batch_size == 0 || limit.n_batches == 0 {
        return Err(Error::invalid("limit", "batch_size and n_batches must be positive"));
    }
    let mut pool = new_pool(dataset, test_set, scenario)?;
    let available = pool.remaining();
    let wanted = limit.batch_size as u64 * limit.n_batches as u64;
    let batch_size = if wanted > available {
        let scaled = (available / limit.n_batches as u64) as usize;
        warn!(
            "only {available} pairs available for a {wanted}-pair limit budget; \
             scaling batches to {scaled}"
        );
        if scaled == 0 {
            return Err(Error::PoolExhausted {
                requested: limit.n_batches,
                remaining: available,
            });
        }
        scaled
    } else {
        limit.batch_size
    };

    let master = scenario.master_seed;
    let mut rng = seeding::stream(master, "limit/sampler");
    let mut oracle = Oracle::new(
        &OracleConfig {
            mode: scenario.oracle,
            rng_seed: derive_seed(master, "limit/oracle"),
        },
        dataset,
    )?;
    let first = pool.sample_random(batch_size, &mut rng)?;
    let labeled = label_batch(&mut oracle, dataset, &first.pairs)?;
    let (mut model, _) = PairEnsemble::fit_initial(&labeled, scenario.learner)?;
    for i in 1..limit.n_batches {
        let batch = pool.sample_uncertain(batch_size, &model, dataset, &mut rng)?;
        let labeled = label_batch(&mut oracle, dataset, &batch.pairs)?;
        model.update(&labeled)?;
        debug!("limit batch {i}: {} oracle queries", oracle.queries());
    }
    Ok(LimitOutcome {
        f1: test_set.f1(&model)?,
        batch_size,
        n_batches: limit.n_batches,
        pairs_used: oracle.queries(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub dataset: String,
    pub policy: PolicyKind,
    pub queries: usize,
    pub f1_mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub f1_std: f64,
    pub n_runs: usize,
}

/// Mean and sample standard deviation per `(dataset, policy, queries)`. All
/// runs of a `(dataset, policy)` group must share one query grid.
pub fn aggregate_runs(rows: &[CurveRow]) -> Result<Vec<AggregateRow>> {
    type Runs = BTreeMap<usize, Vec<(usize, f64)>>;
    let mut groups: BTreeMap<(String, &'static str), (PolicyKind, Runs)> = BTreeMap::new();
    for r in rows {
        let entry = groups
            .entry((r.dataset.clone(), r.policy.as_str()))
            .or_insert_with(|| (r.policy, BTreeMap::new()));
        entry.1.entry(r.run).or_default().push((r.queries, r.f1));
    }
    let mut out = Vec::new();
    for ((dataset, _), (policy, mut runs)) in groups {
        for points in runs.values_mut() {
            points.sort_by_key(|(q, _)| *q);
        }
        let mut iter = runs.iter();
        let (first_run, reference) = iter.next().expect("group has a run");
        let grid: Vec<usize> = reference.iter().map(|(q, _)| *q).collect();
        for (run, points) in iter {
            if points.iter().map(|(q, _)| *q).ne(grid.iter().copied()) {
                return Err(Error::InconsistentGrid(format!(
                    "{dataset}/{policy}: run {run} grid differs from run {first_run}"
                )));
            }
        }
        let n_runs = runs.len();
        for (idx, &queries) in grid.iter().enumerate() {
            let values: Vec<f64> = runs.values().map(|pts| pts[idx].1).collect();
            let mean = values.iter().sum::<f64>() / n_runs as f64;
            let std = if n_runs > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_runs - 1) as f64).sqrt()
            } else {
                0.0
            };
            out.push(AggregateRow {
                dataset: dataset.clone(),
                policy,
                queries,
                f1_mean: mean,
                f1_std: std,
                n_runs,
            });
        }
    }
    Ok(out)
}

pub fn write_results_csv<W: Write>(rows: &[CurveRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.policy.to_string(),
            r.run.to_string(),
            r.seed.to_string(),
            r.queries.to_string(),
            r.f1.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(reader: R) -> Result<Vec<CurveRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers != RESULTS_HEADER {
        return Err(Error::Malformed(format!(
            "results header must be `{}`, got `{}`",
            RESULTS_HEADER.join(","),
            headers.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let bad = |what: &str| Error::Malformed(format!("results row {}: bad {what}", line + 1));
        rows.push(CurveRow {
            dataset: record[0].to_string(),
            policy: record[1].parse()?,
            run: record[2].parse().map_err(|_| bad("run"))?,
            seed: record[3].parse().map_err(|_| bad("seed"))?,
            queries: record[4].parse().map_err(|_| bad("queries"))?,
            f1: record[5].parse().map_err(|_| bad("f1"))?,
        });
    }
    Ok(rows)
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.policy.to_string(),
            r.queries.to_string(),
            r.f1_mean.to_string(),
            r.f1_std.to_string(),
            r.n_runs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
