use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use svmkit_core::bench::{run_bench, BenchConfig};
use svmkit_core::dataset::{
    generate_synthetic, load_csv, load_libsvm, normalize_zscore, save_libsvm, subset_per_class,
};
use svmkit_core::gd::GdConfig;
use svmkit_core::model_file::{load_model, save_model};
use svmkit_core::multiclass::{evaluate_accuracy, predict_multiclass, train_one_vs_one};
use svmkit_core::{Dataset, KernelSpec, PoolConfig, SampleRows, Schedule, SmoConfig, SolverChoice};

#[derive(Parser)]
#[command(name = "svmkit", version, about = "Train, evaluate and benchmark kernel SVMs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a one-vs-one model and write it as JSON.
    Train(TrainArgs),
    /// Predict labels for a data file with a saved model.
    Predict(PredictArgs),
    /// Time training over a sweep and write a CSV report.
    Bench(BenchArgs),
    /// Write a synthetic Gaussian-blob dataset in libsvm format.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Libsvm,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Normalize {
    Zscore,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelKind {
    Linear,
    Rbf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverKind {
    Smo,
    Gd,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

impl From<OnOff> for bool {
    fn from(v: OnOff) -> bool {
        matches!(v, OnOff::On)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Static,
    Dynamic,
}

impl From<ScheduleArg> for Schedule {
    fn from(v: ScheduleArg) -> Schedule {
        match v {
            ScheduleArg::Static => Schedule::Static,
            ScheduleArg::Dynamic => Schedule::Dynamic,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// Defaults to csv for `.csv` files and libsvm otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// 0-based label column for CSV input; defaults to the last column.
    #[arg(long)]
    label_col: Option<usize>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "rbf")]
    kernel: KernelKind,
    /// RBF width; defaults to 1/d.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// SMO iteration cap; defaults to max(10n, 10000).
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value_t = 64)]
    check_interval: usize,
    /// Gradient-ascent step size.
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// Gradient-ascent epochs.
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver_args: SolverArgs,
    #[arg(long, value_enum, default_value = "smo")]
    solver: SolverKind,
    #[arg(long, value_enum, default_value = "zscore")]
    normalize: Normalize,
    #[arg(long, value_enum, default_value = "on")]
    parallel: OnOff,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, value_enum, default_value = "dynamic")]
    schedule: ScheduleArg,
    /// Train on a seeded subset of this many samples per class.
    #[arg(long)]
    samples_per_class: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver_args: SolverArgs,
    /// Comma-separated samples-per-class values.
    #[arg(long, value_delimiter = ',', required = true)]
    samples_per_class: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "smo")]
    solver: Vec<SolverKind>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "on")]
    parallel: Vec<OnOff>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    workers: Vec<usize>,
    #[arg(long, value_enum, default_value = "dynamic")]
    schedule: ScheduleArg,
    #[arg(long, value_enum, default_value = "zscore")]
    normalize: Normalize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset column of the report; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,
    /// Writes to stdout when absent.
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 9)]
    classes: usize,
    #[arg(long, default_value_t = 102)]
    features: usize,
    #[arg(long, default_value_t = 100)]
    samples_per_class: usize,
    /// Minimum distance between class centers.
    #[arg(long, default_value_t = 5.0)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Bench(a) => bench(a),
        Command::Gen(a) => gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(args: &DataArgs) -> Result<Dataset> {
    let path = &args.data;
    let format = args.format.unwrap_or_else(|| {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Libsvm,
        }
    });
    let ds = match format {
        Format::Libsvm => load_libsvm(path)?,
        Format::Csv => {
            let col = match args.label_col {
                Some(c) => c,
                None => csv_columns(path)?.saturating_sub(1),
            };
            load_csv(path, col)?
        }
    };
    Ok(ds)
}

fn csv_columns(path: &Path) -> Result<usize> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let first = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .with_context(|| format!("{}: empty file", path.display()))?;
    Ok(first.split(',').count())
}

fn solver_choice(kind: SolverKind, a: &SolverArgs, d: usize) -> Result<SolverChoice> {
    let kernel = match a.kernel {
        KernelKind::Linear => KernelSpec::Linear,
        KernelKind::Rbf => match a.gamma {
            Some(g) => KernelSpec::rbf(g)?,
            None => KernelSpec::rbf_default(d),
        },
    };
    Ok(match kind {
        SolverKind::Smo => SolverChoice::Smo(SmoConfig {
            tol: a.tol,
            max_iter: a.max_iter,
            check_interval: a.check_interval,
            ..SmoConfig::new(kernel, a.c)
        }),
        SolverKind::Gd => SolverChoice::Gd(GdConfig {
            learning_rate: a.lr,
            epochs: a.epochs,
            tol: a.tol,
            ..GdConfig::new(kernel, a.c)
        }),
    })
}

fn train(a: TrainArgs) -> Result<()> {
    let mut ds = load(&a.data)?;
    if let Some(k) = a.samples_per_class {
        ds = subset_per_class(&ds, k, a.seed)?;
    }
    let stats = if a.normalize == Normalize::Zscore {
        let (normalized, stats) = normalize_zscore(&ds)?;
        ds = normalized;
        Some(stats)
    } else {
        None
    };
    let solver = solver_choice(a.solver, &a.solver_args, ds.d())?;
    let pool = PoolConfig {
        workers: a.workers,
        schedule: a.schedule.into(),
    };

    let start = Instant::now();
    let model = train_one_vs_one(&ds, &solver, a.parallel.into(), &pool)?;
    let seconds = start.elapsed().as_secs_f64();
    let accuracy = evaluate_accuracy(&model, &ds)?;

    if let Some(path) = &a.model_out {
        save_model(path, &model, stats.as_ref())?;
    }
    println!(
        "trained {} binary models ({} classes, n={}, d={}) with {} in {:.3}s; converged {:.3}; training accuracy {:.4}",
        model.models.len(),
        model.m,
        ds.n(),
        ds.d(),
        model.solver,
        seconds,
        model.converged_fraction(),
        accuracy
    );
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let (model, stats) = load_model(&a.model)
        .with_context(|| format!("loading model {}", a.model.display()))?;
    let ds = load(&a.data)?;
    if ds.d() != model.dim() {
        bail!(
            "feature count mismatch: model expects d={}, data has d={}",
            model.dim(),
            ds.d()
        );
    }
    let ds = match &stats {
        Some(s) => s.apply(&ds)?,
        None => ds,
    };

    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let mut correct = 0;
    for i in 0..ds.n() {
        let class = predict_multiclass(&model, ds.row(i))?;
        let predicted = model.class_values[class];
        if predicted == ds.class_values()[ds.label(i)] {
            correct += 1;
        }
        writeln!(out, "{predicted}")?;
    }
    out.flush()?;
    eprintln!(
        "accuracy {} ({correct}/{})",
        correct as f64 / ds.n() as f64,
        ds.n()
    );
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let ds = load(&a.data)?;
    let solvers = a
        .solver
        .iter()
        .map(|&kind| solver_choice(kind, &a.solver_args, ds.d()))
        .collect::<Result<Vec<_>>>()?;
    let name = a.name.clone().unwrap_or_else(|| {
        a.data
            .data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".into())
    });
    let cfg = BenchConfig {
        dataset_name: name,
        samples_per_class: a.samples_per_class,
        solvers,
        parallel: a.parallel.iter().map(|&p| p.into()).collect(),
        workers: a.workers,
        schedule: a.schedule.into(),
        repeats: a.repeats,
        seed: a.seed,
        normalize: a.normalize == Normalize::Zscore,
    };
    let report = run_bench(&ds, &cfg)?;
    match &a.report_out {
        Some(path) => {
            let file = fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            report.write_csv(file)?;
        }
        None => report.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn gen(a: GenArgs) -> Result<()> {
    let ds = generate_synthetic(a.classes, a.features, a.samples_per_class, a.separation, a.seed)?;
    save_libsvm(&a.out, &ds)?;
    eprintln!(
        "wrote {} samples ({} classes, d={}) to {}",
        ds.n(),
        ds.m(),
        ds.d(),
        a.out.display()
    );
    Ok(())
}
