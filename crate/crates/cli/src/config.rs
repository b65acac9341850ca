//! Run configuration: flat `key = value` lines, `#` starts a comment.
//!
//! Every key can be overridden by an environment variable named
//! `COLDPREF_` followed by the key in upper case with `.` replaced by `_`,
//! e.g. `warmup.k` becomes `COLDPREF_WARMUP_K`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use coldpref::experiment::{LimitConfig, PolicyKind, ScenarioConfig};
use coldpref::oracle_sim::{OracleMode, Positivity, DEFAULT_SHIFT_DELTA};
use coldpref::pair_model::tree_depth_for;
use coldpref::tabular_prep::SyntheticConfig;

pub const ENV_PREFIX: &str = "COLDPREF_";

/// Recognized keys with a one-line description each.
pub const KEYS: &[(&str, &str)] = &[
    ("dataset_id", "name written to the dataset column of outputs"),
    ("data", "prepared CSV produced by `prep` (relative to the config file)"),
    ("synthetic.n", "rows of the generated dataset when `data` is absent"),
    ("synthetic.p", "columns of the generated dataset"),
    ("synthetic.noise_std", "target noise standard deviation"),
    ("synthetic.seed", "generator seed"),
    ("synthetic.factor_share", "variance share of the common latent factor, in [0, 1)"),
    ("scenario", "preset: low_data (50..800, 40 runs) or extended (50..10000, 1 run)"),
    ("start", "size of the first query batch"),
    ("step", "size of each later query batch"),
    ("max_queries", "total oracle queries per run"),
    ("runs", "independent runs per policy"),
    ("policies", "comma-separated list of random_blank, warmstart_uncertainty, coldstart_pretrained"),
    ("master_seed", "root of every random stream"),
    ("test_pairs", "size of the fixed evaluation set"),
    ("reuse_warmup", "pretrain once per dataset instead of once per run (true/false)"),
    ("disjoint_test_pairs", "never query pairs that are in the test set (true/false)"),
    ("warmup.k", "pre-training size multiplier, in [1, 100]"),
    ("warmup.alpha", "residual penalty, in [1e-7, 1e-4]"),
    ("warmup.epsilon", "residual floor of the selection weights"),
    ("oracle.mode", "exponential or standard"),
    ("oracle.transform", "standard-mode strengths: min_max_shift, identity, or exp"),
    ("oracle.delta", "offset of min_max_shift"),
    ("oracle.scale", "exponential-mode scale c, or auto for 1/std(y)"),
    ("learner.depth", "tree depth, or auto for round(sqrt(p))"),
    ("learner.learning_rate", "shrinkage per tree"),
    ("learner.l2_lambda", "leaf weight regularization"),
    ("learner.min_child", "minimum samples per split side"),
    ("learner.rounds_warmup", "boosting rounds of the initial fit"),
    ("learner.rounds_increment", "boosting rounds per query batch"),
    ("sampler.candidate_factor", "uncertainty candidates per selected pair"),
    ("limit.batch_size", "pairs per batch of the limit benchmark"),
    ("limit.batches", "batches of the limit benchmark"),
    ("output", "results CSV path"),
    ("summary_output", "optional per-point mean/std CSV path"),
    ("limit_output", "limit benchmark CSV path"),
];

pub fn env_var_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.to_uppercase().replace('.', "_"))
}

/// All configuration problems found, one per entry.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problems):", self.0.len())?;
        for p in &self.0 {
            writeln!(f, "  - {p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Prepared(PathBuf),
    Synthetic(SyntheticConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset_id: String,
    pub data: DataSource,
    /// `learner.max_depth` is a placeholder until [`RunConfig::resolve_depth`].
    pub scenario: ScenarioConfig,
    /// `None` means `round(sqrt(p))`.
    pub learner_depth: Option<usize>,
    pub policies: Vec<PolicyKind>,
    pub limit: LimitConfig,
    pub output: PathBuf,
    pub summary_output: Option<PathBuf>,
    pub limit_output: PathBuf,
}

impl RunConfig {
    pub fn resolve_depth(&mut self, p_columns: usize) {
        self.scenario.learner.max_depth = self.learner_depth.unwrap_or_else(|| tree_depth_for(p_columns));
    }
}

/// Parses `key = value` lines. Later duplicates are reported, not merged.
pub fn parse_lines(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    let mut errors = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                let key = k.trim().to_string();
                if map.insert(key.clone(), v.trim().to_string()).is_some() {
                    errors.push(format!("line {}: duplicate key `{key}`", no + 1));
                }
            }
            _ => errors.push(format!("line {}: expected `key = value`, got `{line}`", no + 1)),
        }
    }
    if errors.is_empty() {
        Ok(map)
    } else {
        Err(ConfigError(errors))
    }
}

/// Applies environment overrides for every known key.
pub fn apply_env<F>(map: &mut BTreeMap<String, String>, lookup: F)
where
    F: Fn(&str) -> Option<String>,
{
    for (key, _) in KEYS {
        if let Some(v) = lookup(&env_var_name(key)) {
            map.insert(key.to_string(), v.trim().to_string());
        }
    }
}

struct Fields {
    map: BTreeMap<String, String>,
    errors: Vec<String>,
}

impl Fields {
    fn raw(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn parse<T: FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        let raw = self.raw(key)?;
        match raw.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.errors.push(format!("{key}: expected {what}, got `{raw}`"));
                None
            }
        }
    }

    fn set<T: FromStr>(&mut self, key: &str, what: &str, slot: &mut T) {
        if let Some(v) = self.parse(key, what) {
            *slot = v;
        }
    }

    fn auto_or<T: FromStr>(&mut self, key: &str, what: &str) -> Option<Option<T>> {
        let raw = self.raw(key)?;
        if raw == "auto" {
            return Some(None);
        }
        match raw.parse() {
            Ok(v) => Some(Some(v)),
            Err(_) => {
                self.errors.push(format!("{key}: expected `auto` or {what}, got `{raw}`"));
                None
            }
        }
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let path = PathBuf::from(p);
    if path.is_absolute() {
        path
    } else {
        base.join(path)
    }
}

/// Builds a validated config. Relative paths are resolved against `base`.
/// `seed_override` replaces `master_seed` when set.
pub fn build(
    map: BTreeMap<String, String>,
    base: &Path,
    seed_override: Option<u64>,
) -> Result<RunConfig, ConfigError> {
    let mut f = Fields {
        map,
        errors: Vec::new(),
    };

    let mut scenario = match f.raw("scenario").as_deref() {
        None | Some("low_data") => ScenarioConfig::low_data(1),
        Some("extended") => ScenarioConfig::extended(1),
        Some(other) => {
            f.errors.push(format!(
                "scenario: unknown preset `{other}`; valid: low_data, extended"
            ));
            ScenarioConfig::low_data(1)
        }
    };

    let dataset_id = f.raw("dataset_id").unwrap_or_else(|| "dataset".to_string());
    if dataset_id.is_empty() || dataset_id.contains([',', '"', '\n']) {
        f.errors.push(format!("dataset_id: `{dataset_id}` must be nonempty without commas or quotes"));
    }

    let mut syn = SyntheticConfig::new(2000, 10, 0.1, 7);
    let synthetic_keys = [
        "synthetic.n",
        "synthetic.p",
        "synthetic.noise_std",
        "synthetic.seed",
        "synthetic.factor_share",
    ];
    let any_synthetic = synthetic_keys.iter().any(|k| f.map.contains_key(*k));
    f.set("synthetic.n", "a positive integer", &mut syn.n);
    f.set("synthetic.p", "a positive integer", &mut syn.p);
    f.set("synthetic.noise_std", "a nonnegative number", &mut syn.noise_std);
    f.set("synthetic.seed", "an integer", &mut syn.seed);
    f.set("synthetic.factor_share", "a number in [0, 1)", &mut syn.factor_share);
    if syn.n < 10 {
        f.errors.push(format!("synthetic.n: must be at least 10, got {}", syn.n));
    }
    if syn.p < 2 {
        f.errors.push(format!("synthetic.p: must be at least 2, got {}", syn.p));
    }
    if !(syn.noise_std >= 0.0 && syn.noise_std.is_finite()) {
        f.errors.push(format!("synthetic.noise_std: must be nonnegative, got {}", syn.noise_std));
    }
    if !(0.0..1.0).contains(&syn.factor_share) {
        f.errors.push(format!("synthetic.factor_share: must lie in [0, 1), got {}", syn.factor_share));
    }
    let data = match f.raw("data") {
        Some(path) => {
            if any_synthetic {
                f.errors.push("data and synthetic.* are mutually exclusive".into());
            }
            DataSource::Prepared(resolve(base, &path))
        }
        None => DataSource::Synthetic(syn),
    };

    f.set("start", "a positive integer", &mut scenario.start);
    f.set("step", "a positive integer", &mut scenario.step);
    f.set("max_queries", "a positive integer", &mut scenario.max_queries);
    f.set("runs", "a positive integer", &mut scenario.n_runs);
    f.set("master_seed", "an integer", &mut scenario.master_seed);
    if let Some(seed) = seed_override {
        scenario.master_seed = seed;
    }
    f.set("test_pairs", "a positive integer", &mut scenario.n_test);
    f.set("reuse_warmup", "true or false", &mut scenario.reuse_warmup);
    f.set("disjoint_test_pairs", "true or false", &mut scenario.disjoint_test_pairs);
    f.set("warmup.k", "a number", &mut scenario.warmup.k);
    f.set("warmup.alpha", "a number", &mut scenario.warmup.alpha);
    f.set("warmup.epsilon", "a number", &mut scenario.warmup.epsilon);
    f.set("sampler.candidate_factor", "a positive integer", &mut scenario.candidate_factor);

    let learner_depth = f.auto_or::<usize>("learner.depth", "a positive integer").flatten();
    let learner = &mut scenario.learner;
    f.set("learner.learning_rate", "a number", &mut learner.learning_rate);
    f.set("learner.l2_lambda", "a number", &mut learner.l2_lambda);
    f.set("learner.min_child", "a positive integer", &mut learner.min_child);
    f.set("learner.rounds_warmup", "an integer", &mut learner.rounds_warmup);
    f.set("learner.rounds_increment", "an integer", &mut learner.rounds_increment);
    learner.max_depth = learner_depth.unwrap_or(1);
    if learner_depth == Some(0) {
        f.errors.push("learner.depth: must be positive".into());
    }

    scenario.oracle = parse_oracle(&mut f);

    let policies = match f.raw("policies") {
        None => PolicyKind::ALL.to_vec(),
        Some(list) => {
            let mut out = Vec::new();
            for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                match name.parse::<PolicyKind>() {
                    Ok(p) if out.contains(&p) => f.errors.push(format!("policies: `{name}` listed twice")),
                    Ok(p) => out.push(p),
                    Err(e) => f.errors.push(format!("policies: {e}")),
                }
            }
            if list.trim().is_empty() {
                f.errors.push("policies: list is empty".into());
            }
            out
        }
    };

    let mut limit = LimitConfig::default();
    f.set("limit.batch_size", "a positive integer", &mut limit.batch_size);
    f.set("limit.batches", "a positive integer", &mut limit.n_batches);
    if limit.batch_size == 0 {
        f.errors.push("limit.batch_size: must be positive".into());
    }
    if limit.n_batches == 0 {
        f.errors.push("limit.batches: must be positive".into());
    }

    let output = resolve(base, &f.raw("output").unwrap_or_else(|| "results.csv".into()));
    let summary_output = f.raw("summary_output").map(|p| resolve(base, &p));
    let limit_output = resolve(base, &f.raw("limit_output").unwrap_or_else(|| "limit.csv".into()));

    for key in std::mem::take(&mut f.map).into_keys() {
        f.errors.push(format!("unknown key `{key}`"));
    }
    f.errors.extend(scenario.problems());

    if f.errors.is_empty() {
        Ok(RunConfig {
            dataset_id,
            data,
            scenario,
            learner_depth,
            policies,
            limit,
            output,
            summary_output,
            limit_output,
        })
    } else {
        Err(ConfigError(f.errors))
    }
}

fn parse_oracle(f: &mut Fields) -> OracleMode {
    let mode = f.raw("oracle.mode");
    let transform = f.raw("oracle.transform");
    let delta: Option<f64> = f.parse("oracle.delta", "a positive number");
    let scale: Option<Option<f64>> = f.auto_or("oracle.scale", "a positive number");

    let exponential = |f: &mut Fields| {
        if delta.is_some() {
            f.errors.push("oracle.delta: only used by the min_max_shift transform".into());
        }
        OracleMode::Exponential {
            scale: scale.flatten(),
        }
    };
    match (mode.as_deref(), transform.as_deref()) {
        (None | Some("exponential"), None | Some("exp")) => exponential(f),
        (Some("standard"), Some("exp")) => exponential(f),
        (Some("standard"), t) => {
            if scale.is_some() {
                f.errors.push("oracle.scale: only used by exponential mode".into());
            }
            match t {
                None | Some("min_max_shift") => OracleMode::Standard(Positivity::MinMaxShift {
                    delta: delta.unwrap_or(DEFAULT_SHIFT_DELTA),
                }),
                Some("identity") => {
                    if delta.is_some() {
                        f.errors.push("oracle.delta: only used by the min_max_shift transform".into());
                    }
                    OracleMode::Standard(Positivity::Identity)
                }
                Some(other) => {
                    f.errors.push(format!(
                        "oracle.transform: unknown transform `{other}`; valid: min_max_shift, identity, exp"
                    ));
                    OracleMode::default()
                }
            }
        }
        (None | Some("exponential"), Some(t)) => {
            f.errors.push(format!(
                "oracle.transform: `{t}` applies to standard mode only"
            ));
            OracleMode::default()
        }
        (Some(other), _) => {
            f.errors.push(format!(
                "oracle.mode: unknown mode `{other}`; valid: exponential, standard"
            ));
            OracleMode::default()
        }
    }
}

/// Reads, overrides from the environment, and validates a config file.
pub fn load(path: &Path, seed_override: Option<u64>) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(vec![format!("cannot read {}: {e}", path.display())]))?;
    let mut map = parse_lines(&text)?;
    apply_env(&mut map, |name| std::env::var(name).ok());
    let base = path.parent().unwrap_or(Path::new("."));
    build(map, base, seed_override)
}
