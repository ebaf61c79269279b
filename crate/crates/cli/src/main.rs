mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use agebo::controller::{run, SearchState};
use agebo::executor::{Executor, SimulatedBackend, SimulatedPool, ThreadPool, ThreadPoolConfig, TrainerBackend, BUILTIN_OBJECTIVES};
use agebo::model::{train, NetworkPlan, TrainConfig};
use agebo::reporting::{self, emit_artifacts, load_csv, split_sizes, ArtifactOptions, RunLog, RunLogWriter};
use agebo::{ArchSpace, EvaluationRecord};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use config::{Backend, RunSettings};

#[derive(Parser)]
#[command(name = "agebo", version, about = "Joint architecture and hyperparameter search for dense networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a search and write its log
    Search(SearchArgs),
    /// Trajectory, high-performer and PCA files from finished logs
    Analyze(AnalyzeArgs),
    #[command(subcommand)]
    Datasets(DatasetsCommand),
}

#[derive(clap::Args)]
struct SearchArgs {
    /// TOML file with run keys; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "agebo-run")]
    out: PathBuf,
    /// Retrain the best configuration and report its test accuracy
    #[arg(long)]
    test_best: bool,
    #[command(flatten)]
    settings: RunSettings,
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// Run log, as PATH or NAME=PATH; repeat for several logs
    #[arg(long = "log", required = true)]
    logs: Vec<String>,
    #[arg(long, default_value = "agebo-analysis")]
    out: PathBuf,
    /// Share of the best configurations projected by the PCA
    #[arg(long, default_value_t = 0.01)]
    fraction: f64,
    /// Quantile defining a high performer
    #[arg(long, default_value_t = 0.99)]
    quantile: f64,
}

#[derive(Subcommand)]
enum DatasetsCommand {
    /// Print train/valid/test split sizes for a row count or a CSV
    SplitCheck {
        #[arg(long, conflicts_with = "data", required_unless_present = "data")]
        rows: Option<usize>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value = "Cover_Type")]
        label_col: String,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
    },
    /// Write a class-balanced synthetic table in the Covertype column format
    Synth {
        #[arg(long, default_value_t = 10_000)]
        rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Search(args) => search(args),
        Command::Analyze(args) => analyze(args),
        Command::Datasets(DatasetsCommand::SplitCheck {
            rows,
            data,
            label_col,
            split_seed,
        }) => split_check(rows, data.as_deref(), &label_col, split_seed),
        Command::Datasets(DatasetsCommand::Synth { rows, seed, out }) => {
            reporting::synthetic::write_covertype_like_csv(&out, rows, seed)?;
            println!("wrote {rows} rows to {}", out.display());
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct RunHeader<'a> {
    search: &'a agebo::controller::SearchConfig,
    settings: &'a RunSettings,
}

fn search(args: SearchArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => RunSettings::from_file(path)?,
        None => RunSettings::default(),
    };
    let settings = file.overlaid(&args.settings);
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let mut trainer = None;
    let (cfg, mut pool): (_, Box<dyn Executor>) = match settings.backend() {
        Backend::Simulated => {
            let name = settings.objective.as_deref().unwrap_or("joint");
            let backend = SimulatedBackend::builtin(name)
                .ok_or_else(|| anyhow!("unknown objective {name:?}; expected one of {BUILTIN_OBJECTIVES:?}"))?;
            let cfg = settings.search_config(ArchSpace::new(settings.nodes(), 1, 2)?)?;
            let workers = cfg.workers;
            (cfg, Box::new(SimulatedPool::new(backend, workers)))
        }
        Backend::Trainer => {
            let data_path = settings.data.as_ref().context("the trainer backend needs --data")?;
            let dataset = load_csv(data_path, settings.label_col(), settings.split_seed.unwrap_or(0))?;
            log::info!(
                "{}: {} rows, {} features, {} classes",
                data_path.display(),
                dataset.len(),
                dataset.n_features(),
                dataset.n_classes()
            );
            let space = ArchSpace::new(settings.nodes(), dataset.n_features(), dataset.n_classes())?;
            let cfg = settings.search_config(space.clone())?;
            let base = TrainConfig {
                epochs: settings.epochs.unwrap_or(20),
                warmup_epochs: settings.epochs.unwrap_or(20).min(5),
                seed: cfg.seed,
                ..TrainConfig::default()
            };
            let n_max = settings.n_max.unwrap_or(8);
            let data = Arc::new(dataset.train_data());
            let backend = TrainerBackend::new(Arc::clone(&data), space, base.clone(), n_max)?;
            trainer = Some((dataset, base, n_max));
            let workers = cfg.workers;
            (cfg, Box::new(ThreadPool::new(backend, ThreadPoolConfig::new(workers))))
        }
    };

    let log_path = args.out.join("run.jsonl");
    let mut writer = RunLogWriter::create(
        &log_path,
        &RunHeader {
            search: &cfg,
            settings: &settings,
        },
    )?;
    let mut write_error = None;
    let outcome = run(&cfg, pool.as_mut(), &mut |rec| {
        if write_error.is_none() {
            write_error = writer.append(rec).err();
        }
    });
    if let Some(e) = write_error {
        return Err(e).context(format!("writing {}", log_path.display()));
    }
    let state = match outcome {
        Ok(state) => state,
        Err(aborted) => {
            summarize(&aborted.state, &args.out)?;
            bail!("search aborted: {}", aborted.error);
        }
    };
    let best = summarize(&state, &args.out)?;
    if let (true, Some((dataset, base, n_max))) = (args.test_best, trainer) {
        let space = &cfg.arch_space;
        let mut plan = NetworkPlan::build(&best.arch, space)?;
        plan.init_params(&mut ChaCha8Rng::seed_from_u64(base.seed));
        let train_cfg = TrainConfig {
            lr1: best.hp.lr1,
            bs1: best.hp.bs1,
            n_shards: best.hp.n.clamp(1, n_max),
            ..base
        };
        let result = train(&mut plan, &dataset.train_data(), &train_cfg)?;
        let test = dataset.test_data();
        let accuracy = plan.accuracy(test.x.view(), &test.y)?;
        println!(
            "retrained best: validation accuracy {:.4}, test accuracy {accuracy:.4}",
            result.valid_accuracy
        );
    }
    println!("log: {}", log_path.display());
    Ok(())
}

/// Prints the outcome and writes `best.json`.
fn summarize(state: &SearchState, out: &Path) -> Result<EvaluationRecord> {
    let best = state.best()?.clone();
    let failed = state.history.iter().filter(|r| !r.is_ok()).count();
    println!(
        "{} evaluations ({failed} failed) in {:.1} s",
        state.history.len(),
        state.clock
    );
    println!(
        "best: job {} objective {:.4} at {:.1} s, lr1 {:.5} bs1 {} n {}, arch {:?}",
        best.job_id, best.objective, best.finish_time, best.hp.lr1, best.hp.bs1, best.hp.n, best.arch.decisions
    );
    fs::write(out.join("best.json"), serde_json::to_string_pretty(&best)? + "\n")?;
    Ok(best)
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let mut logs = Vec::new();
    for spec in &args.logs {
        let (name, path) = match spec.split_once('=') {
            Some((name, path)) => (name.to_string(), PathBuf::from(path)),
            None => {
                let path = PathBuf::from(spec);
                let name = path
                    .parent()
                    .and_then(Path::file_name)
                    .or_else(|| path.file_stem())
                    .map_or_else(|| spec.clone(), |n| n.to_string_lossy().into_owned());
                (name, path)
            }
        };
        let log = RunLog::read(&path).with_context(|| format!("reading {}", path.display()))?;
        let ok = log.ok_records();
        let best = ok.iter().map(|r| r.objective).fold(f64::NAN, f64::max);
        println!("{name}: {} records, {} ok, best {best:.4}", log.records.len(), ok.len());
        logs.push((name, log));
    }
    let named: Vec<(String, &RunLog)> = logs.iter().map(|(n, l)| (n.clone(), l)).collect();
    let opts = ArtifactOptions {
        quantile: args.quantile,
        top_fraction: args.fraction,
        ..ArtifactOptions::default()
    };
    let slices: Vec<&[EvaluationRecord]> = logs.iter().map(|(_, l)| l.records.as_slice()).collect();
    if let Ok(counts) = reporting::high_performer_counts(&slices, args.quantile) {
        println!("high-performer threshold {:.4}", counts.threshold);
        for ((name, _), curve) in logs.iter().zip(&counts.curves) {
            println!("{name}: {} high performers", curve.last().map_or(0, |c| c.1));
        }
    }
    for path in emit_artifacts(&named, &args.out, &opts)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn split_check(rows: Option<usize>, data: Option<&Path>, label_col: &str, split_seed: u64) -> Result<()> {
    let n = match (rows, data) {
        (Some(n), _) => n,
        (None, Some(path)) => {
            let dataset = load_csv(path, label_col, split_seed)?;
            println!(
                "{}: {} features, {} classes",
                path.display(),
                dataset.n_features(),
                dataset.n_classes()
            );
            dataset.len()
        }
        (None, None) => bail!("pass --rows or --data"),
    };
    let (train, valid, test) = split_sizes(n);
    println!("rows {n}: train {train}, valid {valid}, test {test}");
    Ok(())
}
