use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use fairsqp::data::{load_csv, stats, BatchMode, Schema};
use fairsqp::fairness::ConstraintKind;
use fairsqp::runner::{
    emit_plot_data, prepare_data, run_multi_constraint, run_on, run_sweep_on, write_json, write_summary,
    ConstraintSpec, ExperimentConfig, Mode, SweepParam, TrainReport,
};
use fairsqp::surrogate::{SurrogateKind, SurrogateSpec};
use fairsqp::{FairError, Result};

#[derive(Parser)]
#[command(
    name = "fairsqp",
    version,
    about = "Fairness-constrained training with stochastic SQP"
)]
struct Cli {
    /// Directory holding `raw/` data files and `schemas/`.
    #[arg(long, global = true, default_value = "data")]
    data_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dataset statistics of a split.
    Stats(StatsArgs),
    /// Train a single model.
    Train(RunArgs),
    /// Train over a grid of thresholds or lambdas.
    Sweep(SweepArgs),
    /// Disparate-impact, equal-impact, and combined constraint runs.
    Multi(MultiArgs),
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long, default_value = "law")]
    dataset: String,
    #[arg(long)]
    config: Option<PathBuf>,
    /// `train`, `test`, or `all`.
    #[arg(long, default_value = "train")]
    split: String,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, default_value = "law")]
    dataset: String,
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Disparate-impact threshold.
    #[arg(long)]
    delta: Option<f64>,
    /// Regularization weight, or `inf` for none.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    surrogate: Option<SurrogateKind>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Stratified minibatch counts `n0,n1`.
    #[arg(long)]
    batch: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Zero the wall-clock field so reruns give identical reports.
    #[arg(long)]
    deterministic: bool,
    /// Train on the full Adult training split instead of the desk subsample.
    #[arg(long)]
    full: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value = "delta")]
    param: SweepParam,
    /// Comma-separated grid values.
    #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.85,0.9,0.95")]
    grid: String,
    #[arg(long, default_value_t = 4)]
    workers: usize,
}

#[derive(Args)]
struct MultiArgs {
    #[command(flatten)]
    run: RunArgs,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| FairError::InvalidArgument(format!("bad {what} value `{v}`")))
        })
        .collect()
}

fn base_config(args: &RunArgs, data_dir: &Path) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => ExperimentConfig::for_dataset(&args.dataset, data_dir)?,
    };
    if args.surrogate.is_some() || args.alpha.is_some() || args.mu.is_some() {
        let s = cfg.surrogate;
        let kind = args.surrogate.unwrap_or(s.kind);
        cfg.surrogate = SurrogateSpec::new(kind, args.alpha.unwrap_or(s.alpha), args.mu.unwrap_or(s.mu), s.tau)?;
    }
    if let Some(delta) = args.delta {
        cfg.constraints.retain(|c| c.kind != ConstraintKind::DisparateImpact);
        cfg.constraints.insert(
            0,
            ConstraintSpec {
                kind: ConstraintKind::DisparateImpact,
                threshold: delta,
            },
        );
    }
    if let Some(l) = &args.lambda {
        if l == "inf" {
            cfg.lambda = None;
            if cfg.mode != Mode::ConstraintOnly && !cfg.constraints.is_empty() {
                cfg.mode = Mode::ConstraintOnly;
            }
        } else {
            let v: f64 = l
                .parse()
                .map_err(|_| FairError::InvalidArgument(format!("bad lambda `{l}`")))?;
            cfg.lambda = Some(v);
            cfg.mode = if cfg.constraints.is_empty() {
                Mode::RegularizationOnly
            } else {
                Mode::Both
            };
        }
    }
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    if let Some(lr) = args.lr {
        cfg.lr = lr;
    }
    if let Some(b) = &args.batch {
        let counts: Vec<usize> = parse_list(b, "batch")?;
        let [n0, n1] = counts[..] else {
            return Err(FairError::InvalidArgument("--batch takes `n0,n1`".into()));
        };
        cfg.batch = BatchMode::Stratified { n0, n1 };
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.full {
        cfg.dataset.train_subsample = None;
    }
    if args.out.is_some() {
        cfg.output_dir = args.out.clone();
    }
    cfg.deterministic |= args.deterministic;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct StatsOutput {
    dataset: String,
    split: String,
    #[serde(flatten)]
    stats: fairsqp::data::DatasetStats,
}

fn cmd_stats(args: StatsArgs, data_dir: &Path) -> Result<()> {
    let cfg = match &args.config {
        Some(path) => ExperimentConfig::from_json_file(path)?.dataset,
        None => ExperimentConfig::for_dataset(&args.dataset, data_dir)?.dataset,
    };
    let schema = Schema::from_json_file(&cfg.schema)?;
    let full = load_csv(&cfg.path, &schema)?;
    let data = match args.split.as_str() {
        "all" => full,
        "train" => full.split(cfg.train_ratio, cfg.split_seed)?.0,
        "test" => full.split(cfg.train_ratio, cfg.split_seed)?.1,
        other => return Err(FairError::InvalidArgument(format!("unknown split `{other}`"))),
    };
    let out = StatsOutput {
        dataset: cfg.name,
        split: args.split,
        stats: stats(&data),
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn print_report(r: &TrainReport) {
    let f = &r.train_fairness;
    println!(
        "{}: train acc {:.3}% (s=0 {:.3}%, s=1 {:.3}%), test acc {:.3}%, delta_hat {:.4} (surrogate {:.4}), c_di {:.3e}, hash {}",
        r.config.name,
        r.train_accuracy.overall,
        r.train_accuracy.group0,
        r.train_accuracy.group1,
        r.test_accuracy.overall,
        f.delta_hat_hard,
        f.delta_hat_surrogate,
        f.c_di_hard,
        &r.weight_checksum[..16],
    );
}

fn cmd_train(args: RunArgs, data_dir: &Path) -> Result<()> {
    let cfg = base_config(&args, data_dir)?;
    let (train, test) = prepare_data(&cfg.dataset)?;
    let out = run_on(&cfg, &train, &test)?;
    print_report(&out.report);
    Ok(())
}

fn cmd_sweep(args: SweepArgs, data_dir: &Path) -> Result<()> {
    let cfg = base_config(&args.run, data_dir)?;
    let grid: Vec<f64> = parse_list(&args.grid, "grid")?;
    let (train, test) = prepare_data(&cfg.dataset)?;
    let points = run_sweep_on(&cfg, args.param, &grid, args.workers, &train, &test)?;
    for p in &points {
        match (&p.report, &p.error) {
            (Some(r), _) => print_report(r),
            (None, Some(e)) => println!("{} = {}: failed: {e}", args.param, p.value),
            _ => {}
        }
    }
    if let Some(dir) = &cfg.output_dir {
        write_summary(&points, dir)?;
        let rows: Vec<_> = points
            .iter()
            .filter_map(|p| p.report.as_ref().map(|r| (p.value, r)))
            .collect();
        emit_plot_data(&rows, &dir.join("plots"))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MultiRow<'a> {
    variant: &'a str,
    overall: f64,
    group0: f64,
    group1: f64,
    c_di_surrogate: f64,
    c_ei_surrogate: Option<f64>,
    c_di_hard: f64,
    c_ei_hard: Option<f64>,
}

fn cmd_multi(args: MultiArgs, data_dir: &Path) -> Result<()> {
    let mut cfg = base_config(&args.run, data_dir)?;
    let delta = args.run.delta.unwrap_or(0.8);
    cfg.constraints.clear();
    let (train, test) = prepare_data(&cfg.dataset)?;
    let base_dir = cfg.output_dir.clone();
    let sub = |name: &str| {
        let mut c = cfg.clone();
        c.name = format!("{}-{name}", cfg.name);
        c.output_dir = base_dir.as_ref().map(|d| d.join(name));
        c
    };
    let mut reports = Vec::new();
    for (name, kind) in [
        ("di", ConstraintKind::DisparateImpact),
        ("ei", ConstraintKind::EqualImpact),
    ] {
        let mut c = sub(name);
        c.constraints = vec![ConstraintSpec { kind, threshold: delta }];
        c.report_delta = Some(delta);
        reports.push((name, run_on(&c, &train, &test)?.report));
    }
    reports.push(("both", run_multi_constraint(&sub("both"), delta, &train, &test)?));
    for (_, r) in &reports {
        print_report(r);
    }
    if let Some(dir) = &base_dir {
        let mut w = csv::Writer::from_path(dir.join("multi.csv"))?;
        for (name, r) in &reports {
            w.serialize(MultiRow {
                variant: name,
                overall: r.train_accuracy.overall,
                group0: r.train_accuracy.group0,
                group1: r.train_accuracy.group1,
                c_di_surrogate: r.train_fairness.c_di_surrogate,
                c_ei_surrogate: r.train_fairness.c_ei_surrogate,
                c_di_hard: r.train_fairness.c_di_hard,
                c_ei_hard: r.train_fairness.c_ei_hard,
            })?;
        }
        w.flush()?;
        write_json(
            &dir.join("multi.json"),
            &reports.iter().map(|(_, r)| r).collect::<Vec<_>>(),
        )?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Stats(a) => cmd_stats(a, &cli.data_dir),
        Command::Train(a) => cmd_train(a, &cli.data_dir),
        Command::Sweep(a) => cmd_sweep(a, &cli.data_dir),
        Command::Multi(a) => cmd_multi(a, &cli.data_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
