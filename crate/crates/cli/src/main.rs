mod config;
mod plot;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::info;

use coldpref::experiment::{
    aggregate_runs, build_test_set, practical_limit, read_results_csv, run_scenario, test_set_seed,
    write_aggregate_csv, write_results_csv, PolicyKind,
};
use coldpref::pca_warmup::{fit_dataset, plan_warmup};
use coldpref::tabular_prep::{generate_synthetic_with, prepare, PrepOptions, PreparedDataset, RawTable, SyntheticConfig};

use crate::config::{ConfigError, DataSource, RunConfig};
use crate::plot::PlotError;

#[derive(Parser)]
#[command(name = "coldpref", version, about = "Cold-start active preference learning experiments")]
struct Cli {
    /// Overrides the master seed (and the generator seed of `synth`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for independent runs.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Repeat for more detail (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean a raw CSV into a standardized dataset.
    Prep {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        output: PathBuf,
        /// Write the preparation report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Largest cardinality that is one-hot encoded.
        #[arg(long, default_value_t = 10)]
        onehot_max: usize,
        /// Columns with a larger missing fraction are dropped.
        #[arg(long, default_value_t = 0.5)]
        drop_threshold: f64,
        /// Comma-separated columns to remove first.
        #[arg(long, value_delimiter = ',')]
        drop: Vec<String>,
    },
    /// Generate a synthetic prepared dataset.
    Synth {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        p: usize,
        #[arg(long, default_value_t = 0.1)]
        noise_std: f64,
        #[arg(long, default_value_t = SyntheticConfig::DEFAULT_FACTOR_SHARE)]
        factor_share: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the configured policies and write learning curves.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's `output`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compute the practical performance limit.
    BenchLimit {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's `limit_output`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Draw learning curves as SVG.
    Plot {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        limit: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        /// Dataset to draw when the results hold several.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        title: Option<String>,
    },
}

/// Bad input or configuration; exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn is_usage(err: &anyhow::Error) -> bool {
    if err.is::<UsageError>() || err.is::<ConfigError>() {
        return true;
    }
    if let Some(e) = err.downcast_ref::<PlotError>() {
        return !matches!(e, PlotError::Csv(_));
    }
    matches!(
        err.downcast_ref::<coldpref::Error>(),
        Some(
            coldpref::Error::EmptyInput(_)
                | coldpref::Error::MissingColumn(_)
                | coldpref::Error::TargetNotNumeric(_)
                | coldpref::Error::NoUsableFeatures
                | coldpref::Error::DatasetTooSmall(_)
                | coldpref::Error::InvalidParameter { .. }
                | coldpref::Error::Malformed(_)
        )
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_usage(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    if cli.jobs == 0 {
        return Err(UsageError("--jobs must be at least 1".into()).into());
    }
    match cli.command {
        Command::Prep {
            input,
            target,
            output,
            report,
            onehot_max,
            drop_threshold,
            drop,
        } => cmd_prep(&input, &target, &output, report.as_deref(), onehot_max, drop_threshold, drop),
        Command::Synth {
            n,
            p,
            noise_std,
            factor_share,
            output,
        } => {
            let cfg = SyntheticConfig {
                n,
                p,
                noise_std,
                seed: cli.seed.unwrap_or(7),
                factor_share,
            };
            let ds = generate_synthetic_with(&cfg)?;
            write_dataset(&ds, &output)?;
            println!("wrote {} rows x {} features to {}", ds.n(), ds.p(), output.display());
            Ok(())
        }
        Command::Run { config, output } => cmd_run(&config, output, cli.seed, cli.jobs),
        Command::BenchLimit { config, output } => cmd_bench_limit(&config, output, cli.seed),
        Command::Plot {
            results,
            limit,
            output,
            dataset,
            title,
        } => cmd_plot(&results, limit.as_deref(), &output, dataset.as_deref(), title),
    }
}

fn cmd_prep(
    input: &Path,
    target: &str,
    output: &Path,
    report: Option<&Path>,
    onehot_max: usize,
    drop_threshold: f64,
    drop: Vec<String>,
) -> Result<()> {
    let file = File::open(input).with_context(|| format!("cannot open {}", input.display()))?;
    let table = RawTable::from_csv(BufReader::new(file), target)?;
    let options = PrepOptions {
        onehot_max_cardinality: onehot_max,
        drop_threshold,
        drop_columns: drop,
    };
    let ds = prepare(table, &options)?;
    write_dataset(&ds, output)?;
    let text = format!(
        "{}prepared {} rows x {} features\n",
        ds.report.to_text(),
        ds.n(),
        ds.p()
    );
    match report {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn write_dataset(ds: &PreparedDataset, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    ds.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<(RunConfig, PreparedDataset)> {
    let mut cfg = config::load(path, seed)?;
    let ds = match &cfg.data {
        DataSource::Prepared(p) => {
            let file = File::open(p).with_context(|| format!("cannot open dataset {}", p.display()))?;
            PreparedDataset::read_csv(BufReader::new(file))?
        }
        DataSource::Synthetic(s) => generate_synthetic_with(s)?,
    };
    cfg.resolve_depth(ds.p());
    info!(
        "dataset {}: {} rows x {} features, tree depth {}",
        cfg.dataset_id,
        ds.n(),
        ds.p(),
        cfg.scenario.learner.max_depth
    );
    Ok((cfg, ds))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn cmd_run(config_path: &Path, output: Option<PathBuf>, seed: Option<u64>, jobs: usize) -> Result<()> {
    let (cfg, ds) = load_config(config_path, seed)?;
    if cfg.policies.contains(&PolicyKind::ColdstartPretrained) && log::log_enabled!(log::Level::Info) {
        let pca = fit_dataset(&ds)?;
        let w = &cfg.scenario.warmup;
        let plan = plan_warmup(&pca, ds.n(), w.k, w.alpha, w.epsilon)?;
        info!("warm-up\n{}", pca.report(ds.feature_names(), 5, Some(&plan)));
    }
    let outcome = run_scenario(&cfg.dataset_id, &ds, &cfg.scenario, &cfg.policies, jobs)?;

    let output = output.unwrap_or(cfg.output.clone());
    let mut w = create(&output)?;
    write_results_csv(&outcome.rows, &mut w)?;
    w.flush()?;
    let aggregate = aggregate_runs(&outcome.rows)?;
    if let Some(path) = &cfg.summary_output {
        let mut w = create(path)?;
        write_aggregate_csv(&aggregate, &mut w)?;
        w.flush()?;
    }

    println!(
        "{} rows written to {}",
        outcome.rows.len(),
        output.display()
    );
    println!(
        "PCA ordering test F1: {:.4} as fitted, {:.4} reversed",
        outcome.orientation.f1_as_fitted, outcome.orientation.f1_reversed
    );
    if let Some((_, w)) = outcome.warmups.first() {
        println!(
            "warm-up: {} pseudo-labeled pairs, sigma_r2 {:.4}, pretrained F1 {:.4}",
            w.n_pre, w.sigma_r2, w.pretrained_f1
        );
    }
    let last = cfg.scenario.max_queries;
    for policy in &cfg.policies {
        if let Some(row) = aggregate
            .iter()
            .find(|a| a.policy == *policy && a.queries == last)
        {
            println!(
                "{:<24} F1 at {last} queries: {:.4} (std {:.4}, {} runs)",
                policy.as_str(),
                row.f1_mean,
                row.f1_std,
                row.n_runs
            );
        }
    }
    Ok(())
}

fn cmd_bench_limit(config_path: &Path, output: Option<PathBuf>, seed: Option<u64>) -> Result<()> {
    let (cfg, ds) = load_config(config_path, seed)?;
    let test_set = build_test_set(&ds, cfg.scenario.n_test, test_set_seed(cfg.scenario.master_seed))?;
    let limit = practical_limit(&ds, &test_set, &cfg.scenario, &cfg.limit)?;
    let output = output.unwrap_or(cfg.limit_output.clone());
    let mut w = csv::Writer::from_writer(create(&output)?);
    w.write_record(["dataset", "f1_limit"])?;
    w.write_record([cfg.dataset_id.clone(), limit.f1.to_string()])?;
    w.flush()?;
    println!(
        "practical limit F1 {:.4} ({} batches of {} pairs) written to {}",
        limit.f1,
        limit.n_batches,
        limit.batch_size,
        output.display()
    );
    Ok(())
}

fn cmd_plot(
    results: &Path,
    limit: Option<&Path>,
    output: &Path,
    dataset: Option<&str>,
    title: Option<String>,
) -> Result<()> {
    let file = File::open(results).with_context(|| format!("cannot open {}", results.display()))?;
    let rows = read_results_csv(BufReader::new(file))?;
    if rows.is_empty() {
        return Err(PlotError::Empty.into());
    }
    let aggregate = plot::select_dataset(aggregate_runs(&rows)?, dataset)?;
    let name = aggregate[0].dataset.clone();
    let limit_value = match limit {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            let entries = plot::read_limit_csv(BufReader::new(file))?;
            let hit = entries
                .iter()
                .find(|(d, _)| *d == name)
                .or_else(|| (entries.len() == 1).then(|| &entries[0]))
                .ok_or_else(|| PlotError::Limit(format!("no entry for dataset `{name}`")))?;
            Some(hit.1)
        }
        None => None,
    };
    let svg = plot::render_svg(&aggregate, limit_value, title.as_deref().unwrap_or(&name))?;
    fs::write(output, svg).with_context(|| format!("cannot write {}", output.display()))?;
    println!("wrote {}", output.display());
    Ok(())
}
