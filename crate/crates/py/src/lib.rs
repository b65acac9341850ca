//! Python bindings: datasets, PCA warm-up, the pairwise ensemble, the
//! simulated oracle, F1 and whole-scenario runs.

use std::fs::File;
use std::io::{BufReader, BufWriter};

use coldpref::experiment::{
    self, build_test_set, test_set_seed, LimitConfig, PolicyKind, ScenarioConfig,
};
use coldpref::oracle_sim::{self, OracleConfig, OracleMode, Positivity, DEFAULT_SHIFT_DELTA};
use coldpref::pair_model::{self, LearnerConfig, PairBatch};
use coldpref::pca_warmup;
use coldpref::tabular_prep::{self, PrepOptions, RawTable, SyntheticConfig};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn err(e: coldpref::Error) -> PyErr {
    match e {
        coldpref::Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn io(e: std::io::Error) -> PyErr {
    PyIOError::new_err(e.to_string())
}

/// A cleaned, standardized dataset.
#[pyclass(name = "Dataset", module = "coldpref_py", frozen)]
struct Dataset {
    inner: tabular_prep::PreparedDataset,
}

#[pymethods]
impl Dataset {
    /// Reads a raw CSV and runs the full preparation pipeline.
    #[staticmethod]
    #[pyo3(signature = (path, target, onehot_max=10, drop_threshold=0.5, drop=Vec::new()))]
    fn from_csv(path: &str, target: &str, onehot_max: usize, drop_threshold: f64, drop: Vec<String>) -> PyResult<Self> {
        let file = File::open(path).map_err(io)?;
        let table = RawTable::from_csv(BufReader::new(file), target).map_err(err)?;
        let options = PrepOptions {
            onehot_max_cardinality: onehot_max,
            drop_threshold,
            drop_columns: drop,
        };
        let inner = tabular_prep::prepare(table, &options).map_err(err)?;
        Ok(Self { inner })
    }

    /// Reads a CSV written by `write_csv` or the `prep` command.
    #[staticmethod]
    fn read_prepared(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(io)?;
        let inner = tabular_prep::PreparedDataset::read_csv(BufReader::new(file)).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (n=2000, p=10, noise_std=0.1, seed=7, factor_share=SyntheticConfig::DEFAULT_FACTOR_SHARE))]
    fn synthetic(n: usize, p: usize, noise_std: f64, seed: u64, factor_share: f64) -> PyResult<Self> {
        let inner = tabular_prep::generate_synthetic_with(&SyntheticConfig {
            n,
            p,
            noise_std,
            seed,
            factor_share,
        })
        .map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names().to_vec()
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.inner.y().to_vec()
    }

    /// Feature matrix as a list of rows.
    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.x().chunks(self.inner.p()).map(<[f64]>::to_vec).collect()
    }

    /// Concatenated features `[x_u, x_v]` of a pair.
    fn pair_features(&self, u: usize, v: usize) -> PyResult<Vec<f64>> {
        let n = self.inner.n();
        if u >= n || v >= n {
            return Err(PyValueError::new_err(format!("row index out of range for {n} rows")));
        }
        let mut z = Vec::with_capacity(2 * self.inner.p());
        self.inner.pair_features_into(u, v, &mut z);
        Ok(z)
    }

    #[getter]
    fn report(&self) -> String {
        self.inner.report.to_text()
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        let file = File::create(path).map_err(io)?;
        self.inner.write_csv(BufWriter::new(file)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, p={})", self.inner.n(), self.inner.p())
    }
}

/// First principal component of a dataset.
#[pyclass(name = "Pca", module = "coldpref_py", frozen)]
struct Pca {
    inner: pca_warmup::PcaModel,
}

#[pymethods]
impl Pca {
    #[staticmethod]
    fn fit(dataset: &Dataset) -> PyResult<Self> {
        Ok(Self {
            inner: pca_warmup::fit_dataset(&dataset.inner).map_err(err)?,
        })
    }

    #[getter]
    fn w(&self) -> Vec<f64> {
        self.inner.w.clone()
    }

    #[getter]
    fn scores(&self) -> Vec<f64> {
        self.inner.scores.clone()
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals.clone()
    }

    #[getter]
    fn sigma_r2(&self) -> f64 {
        self.inner.sigma_r2
    }

    #[getter]
    fn eigenvalue(&self) -> f64 {
        self.inner.eigenvalue
    }

    /// Returns `(n_pre, selection_probs)`.
    #[pyo3(signature = (k=10.0, alpha=1e-5, epsilon=pca_warmup::DEFAULT_EPSILON))]
    fn plan(&self, k: f64, alpha: f64, epsilon: f64) -> PyResult<(u64, Vec<f64>)> {
        let n = self.inner.scores.len();
        let plan = pca_warmup::plan_warmup(&self.inner, n, k, alpha, epsilon).map_err(err)?;
        Ok((plan.n_pre, plan.selection_probs))
    }

    /// Pseudo-labeled pairs `(u, v, label)` for pre-training.
    #[pyo3(signature = (seed, k=10.0, alpha=1e-5, epsilon=pca_warmup::DEFAULT_EPSILON))]
    fn pseudo_pairs(&self, seed: u64, k: f64, alpha: f64, epsilon: f64) -> PyResult<Vec<(usize, usize, u8)>> {
        let n = self.inner.scores.len();
        let plan = pca_warmup::plan_warmup(&self.inner, n, k, alpha, epsilon).map_err(err)?;
        let pairs = pca_warmup::sample_pseudo_pairs(&plan, &self.inner, seed).map_err(err)?;
        Ok(pairs.into_iter().map(|p| (p.u, p.v, p.label)).collect())
    }
}

/// Boosted pairwise preference model.
#[pyclass(name = "Ensemble", module = "coldpref_py")]
struct Ensemble {
    inner: pair_model::PairEnsemble,
}

fn learner(
    depth: usize,
    learning_rate: f64,
    l2_lambda: f64,
    min_child: usize,
    rounds_warmup: usize,
    rounds_increment: usize,
) -> LearnerConfig {
    LearnerConfig {
        learning_rate,
        max_depth: depth,
        l2_lambda,
        min_child,
        rounds_warmup,
        rounds_increment,
    }
}

fn batch(features: Vec<Vec<f64>>, labels: Vec<u8>) -> PyResult<PairBatch> {
    let dim = features.first().map_or(0, Vec::len);
    if features.iter().any(|r| r.len() != dim) {
        return Err(PyValueError::new_err("feature rows differ in length"));
    }
    PairBatch::new(dim, features.concat(), labels).map_err(err)
}

#[pymethods]
impl Ensemble {
    /// Empty model predicting 0.5 everywhere.
    #[staticmethod]
    #[pyo3(signature = (dim, depth=3, learning_rate=0.1, l2_lambda=1.0, min_child=1, rounds_warmup=500, rounds_increment=25))]
    fn blank(
        dim: usize,
        depth: usize,
        learning_rate: f64,
        l2_lambda: f64,
        min_child: usize,
        rounds_warmup: usize,
        rounds_increment: usize,
    ) -> Self {
        let cfg = learner(depth, learning_rate, l2_lambda, min_child, rounds_warmup, rounds_increment);
        Self {
            inner: pair_model::PairEnsemble::blank(cfg, dim),
        }
    }

    /// Initial fit; returns the model and its per-round training losses.
    #[staticmethod]
    #[pyo3(signature = (features, labels, depth=3, learning_rate=0.1, l2_lambda=1.0, min_child=1, rounds_warmup=500, rounds_increment=25))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        features: Vec<Vec<f64>>,
        labels: Vec<u8>,
        depth: usize,
        learning_rate: f64,
        l2_lambda: f64,
        min_child: usize,
        rounds_warmup: usize,
        rounds_increment: usize,
    ) -> PyResult<(Self, Vec<f64>)> {
        let cfg = learner(depth, learning_rate, l2_lambda, min_child, rounds_warmup, rounds_increment);
        let (inner, report) = pair_model::PairEnsemble::fit_initial(&batch(features, labels)?, cfg).map_err(err)?;
        Ok((Self { inner }, report.losses))
    }

    /// Appends trees fitted on this batch; returns the per-round losses.
    fn update(&mut self, features: Vec<Vec<f64>>, labels: Vec<u8>) -> PyResult<Vec<f64>> {
        let report = self.inner.update(&batch(features, labels)?).map_err(err)?;
        Ok(report.losses)
    }

    fn predict_prob(&self, z: Vec<f64>) -> PyResult<f64> {
        self.inner.predict_prob(&z).map_err(err)
    }

    fn raw_score(&self, z: Vec<f64>) -> PyResult<f64> {
        self.inner.raw_score(&z).map_err(err)
    }

    #[getter]
    fn tree_count(&self) -> usize {
        self.inner.tree_count()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_bytes())
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(Self {
            inner: pair_model::PairEnsemble::from_bytes(data).map_err(err)?,
        })
    }
}

fn oracle_mode(mode: &str, transform: Option<&str>, delta: Option<f64>, scale: Option<f64>) -> PyResult<OracleMode> {
    match (mode, transform) {
        ("exponential", None | Some("exp")) | ("standard", Some("exp")) => Ok(OracleMode::Exponential { scale }),
        ("standard", None | Some("min_max_shift")) => Ok(OracleMode::Standard(Positivity::MinMaxShift {
            delta: delta.unwrap_or(DEFAULT_SHIFT_DELTA),
        })),
        ("standard", Some("identity")) => Ok(OracleMode::Standard(Positivity::Identity)),
        (m, t) => Err(PyValueError::new_err(format!(
            "unsupported oracle mode `{m}` with transform `{}`; modes: exponential, standard; \
             transforms: min_max_shift, identity, exp",
            t.unwrap_or("default")
        ))),
    }
}

/// Simulated Bradley-Terry labeler over a dataset's true targets.
#[pyclass(name = "Oracle", module = "coldpref_py")]
struct Oracle {
    inner: oracle_sim::Oracle,
    dataset: tabular_prep::PreparedDataset,
}

#[pymethods]
impl Oracle {
    #[new]
    #[pyo3(signature = (dataset, seed, mode="exponential", transform=None, delta=None, scale=None))]
    fn new(
        dataset: &Dataset,
        seed: u64,
        mode: &str,
        transform: Option<&str>,
        delta: Option<f64>,
        scale: Option<f64>,
    ) -> PyResult<Self> {
        let config = OracleConfig {
            mode: oracle_mode(mode, transform, delta, scale)?,
            rng_seed: seed,
        };
        Ok(Self {
            inner: oracle_sim::Oracle::new(&config, &dataset.inner).map_err(err)?,
            dataset: dataset.inner.clone(),
        })
    }

    /// Returns `(probability u is preferred, label)`.
    fn label(&mut self, u: usize, v: usize) -> PyResult<(f64, u8)> {
        let l = self.inner.label_pair(u, v, &self.dataset).map_err(err)?;
        Ok((l.prob_u_preferred, l.label))
    }

    #[getter]
    fn queries(&self) -> u64 {
        self.inner.queries()
    }
}

#[pyfunction]
fn f1_score(predictions: Vec<u8>, truths: Vec<u8>) -> PyResult<f64> {
    experiment::f1_score(&predictions, &truths).map_err(err)
}

#[pyfunction]
fn pretraining_size(n: usize, k: f64, alpha: f64, sigma_r2: f64) -> u64 {
    pca_warmup::pretraining_size(n, k, alpha, sigma_r2)
}

#[pyfunction]
fn tree_depth_for(p: usize) -> usize {
    pair_model::tree_depth_for(p)
}

#[allow(clippy::too_many_arguments)]
fn scenario(
    dataset: &Dataset,
    extended: bool,
    runs: Option<usize>,
    max_queries: Option<usize>,
    master_seed: u64,
    test_pairs: Option<usize>,
    k: f64,
    alpha: f64,
    rounds_warmup: Option<usize>,
) -> ScenarioConfig {
    let p = dataset.inner.p();
    let mut s = if extended {
        ScenarioConfig::extended(p)
    } else {
        ScenarioConfig::low_data(p)
    };
    s.master_seed = master_seed;
    s.warmup.k = k;
    s.warmup.alpha = alpha;
    if let Some(r) = runs {
        s.n_runs = r;
    }
    if let Some(m) = max_queries {
        s.max_queries = m;
    }
    if let Some(t) = test_pairs {
        s.n_test = t;
    }
    if let Some(r) = rounds_warmup {
        s.learner.rounds_warmup = r;
    }
    s
}

type Row = (String, String, usize, u64, usize, f64);

/// Runs the policies and returns rows `(dataset, policy, run, seed, queries, f1)`.
#[pyfunction]
#[pyo3(signature = (
    dataset, dataset_id="dataset", policies=None, extended=false, runs=None, max_queries=None,
    master_seed=0, test_pairs=None, k=10.0, alpha=1e-5, rounds_warmup=None, jobs=1
))]
#[allow(clippy::too_many_arguments)]
fn run_scenario(
    py: Python<'_>,
    dataset: &Dataset,
    dataset_id: &str,
    policies: Option<Vec<String>>,
    extended: bool,
    runs: Option<usize>,
    max_queries: Option<usize>,
    master_seed: u64,
    test_pairs: Option<usize>,
    k: f64,
    alpha: f64,
    rounds_warmup: Option<usize>,
    jobs: usize,
) -> PyResult<Vec<Row>> {
    let policies: Vec<PolicyKind> = match policies {
        None => PolicyKind::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| n.parse().map_err(err))
            .collect::<PyResult<_>>()?,
    };
    let s = scenario(dataset, extended, runs, max_queries, master_seed, test_pairs, k, alpha, rounds_warmup);
    let ds = &dataset.inner;
    let outcome = py
        .detach(|| experiment::run_scenario(dataset_id, ds, &s, &policies, jobs))
        .map_err(err)?;
    Ok(outcome
        .rows
        .into_iter()
        .map(|r| (r.dataset, r.policy.to_string(), r.run, r.seed, r.queries, r.f1))
        .collect())
}

/// Practical-limit F1: one random batch, then uncertainty-selected batches.
#[pyfunction]
#[pyo3(signature = (dataset, batch_size=1000, batches=100, master_seed=0, test_pairs=None, rounds_warmup=None))]
fn practical_limit(
    py: Python<'_>,
    dataset: &Dataset,
    batch_size: usize,
    batches: usize,
    master_seed: u64,
    test_pairs: Option<usize>,
    rounds_warmup: Option<usize>,
) -> PyResult<f64> {
    let s = scenario(dataset, false, None, None, master_seed, test_pairs, 10.0, 1e-5, rounds_warmup);
    let ds = &dataset.inner;
    let limit = LimitConfig {
        batch_size,
        n_batches: batches,
    };
    py.detach(|| {
        let test_set = build_test_set(ds, s.n_test, test_set_seed(s.master_seed))?;
        experiment::practical_limit(ds, &test_set, &s, &limit)
    })
    .map(|o| o.f1)
    .map_err(err)
}

#[pymodule]
fn coldpref_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Pca>()?;
    m.add_class::<Ensemble>()?;
    m.add_class::<Oracle>()?;
    m.add_function(wrap_pyfunction!(f1_score, m)?)?;
    m.add_function(wrap_pyfunction!(pretraining_size, m)?)?;
    m.add_function(wrap_pyfunction!(tree_depth_for, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(practical_limit, m)?)?;
    Ok(())
}
