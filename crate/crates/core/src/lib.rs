//! Cold-start active preference learning.
//!
//! The pipeline bootstraps a pairwise preference model from unlabeled tabular
//! data using pseudo-labels derived from the first principal component, then
//! refines it with batches of labels from a simulated noisy Bradley-Terry
//! oracle. The [`experiment`] module benchmarks three learning policies by F1
//! learning curves on a fixed set of test pairs.
//!
//! Modules, in pipeline order:
//!
//! - [`tabular_prep`]: CSV ingestion, categorical encoding, imputation,
//!   standardization and a synthetic dataset generator.
//! - [`pca_warmup`]: one-component PCA, residuals, pre-training sample size and
//!   residual-weighted pseudo-labeled pair sampling.
//! - [`pair_model`]: gradient-boosted regression trees over concatenated pair
//!   features with logistic loss and incremental continuation.
//! - [`oracle_sim`]: Bradley-Terry label simulation.
//! - [`sampler`]: random and uncertainty-based pair selection.
//! - [`experiment`]: policies, active loop, F1 evaluation, aggregation and the
//!   practical performance limit benchmark.

pub mod error;
pub mod experiment;
pub mod oracle_sim;
pub mod pair_model;
pub mod pca_warmup;
pub mod sampler;
pub mod seeding;
pub mod tabular_prep;

pub use error::{Error, Result};
pub use experiment::{
    aggregate_runs, build_test_set, f1_score, practical_limit, run_policy, run_scenario,
    AggregateRow, CurveRow, LimitConfig, PolicyKind, ScenarioConfig, TestSet,
};
pub use oracle_sim::{Oracle, OracleConfig, OracleLabel, OracleMode, Positivity};
pub use pair_model::{tree_depth_for, LearnerConfig, PairBatch, PairEnsemble};
pub use pca_warmup::{fit_first_component, plan_warmup, sample_pseudo_pairs, PcaModel, WarmupPlan};
pub use sampler::{PairPool, QueryBatch, SamplingStrategy};
pub use tabular_prep::{generate_synthetic, PrepOptions, PreparedDataset, RawTable};
