//! `respira`: simulate cohorts, augment them, train kernel SVMs and report
//! metrics. Every stage reads and writes plain CSV or model files, so each
//! one can be rerun on its own.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use respira_core::dataset::{self, PhaseRecord};
use respira_core::io::write_atomic;
use respira_core::metrics::{confusion_csv, metrics_csv, ConfusionMatrix, ScoreRow};
use respira_core::pipeline::{self, AugmentOptions, ExperimentConfig, SimulationConfig};
use respira_core::radar_sim::default_paper_params;
use respira_core::svm::{self, TrainConfig};
use respira_core::{Error, Label};

#[derive(Parser, Debug)]
#[command(
    name = "respira",
    version,
    about = "Radar breath-rate simulation and SVM classification"
)]
struct Cli {
    /// Seed for every random draw in the run.
    #[arg(long, global = true, env = "RESPIRA_SEED", default_value_t = 42)]
    seed: u64,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a cohort and write phases.csv and manifest.csv.
    Simulate(SimulateArgs),
    /// Append noisy copies and SMOTE samples; writes augmented.csv.
    Augment(AugmentArgs),
    /// Split, train one kernel and write model.svm, split.csv and validation.csv.
    Train(TrainArgs),
    /// Score a dataset with a model; writes metrics.csv, confusion.csv and scores.csv.
    Evaluate(EvaluateArgs),
    /// Train several kernels on one split; writes compare.csv.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// Lower bound of breaths per observation window.
    #[arg(long, default_value_t = 2.0)]
    breaths_min: f64,
    #[arg(long, default_value_t = 12.0)]
    breaths_max: f64,
    /// Chest displacement amplitude bounds in millimetres.
    #[arg(long, default_value_t = 0.5)]
    amplitude_mm_min: f64,
    #[arg(long, default_value_t = 5.0)]
    amplitude_mm_max: f64,
    /// Signal-to-noise ratio; `inf` disables noise.
    #[arg(long, default_value_t = 15.0, allow_negative_numbers = true)]
    snr_db: f64,
}

#[derive(Args, Debug, Clone)]
struct AugmentFlags {
    /// Comma-separated noise factors, one noisy copy per factor.
    #[arg(long, value_delimiter = ',')]
    noise_factors: Vec<f64>,
    /// Balance the classes with SMOTE after noise augmentation.
    #[arg(long)]
    smote: bool,
    #[arg(long, default_value_t = dataset::DEFAULT_SMOTE_K)]
    smote_k: usize,
}

impl AugmentFlags {
    fn options(&self, seed: u64) -> AugmentOptions {
        AugmentOptions {
            noise_factors: self.noise_factors.clone(),
            smote: self.smote,
            smote_k: self.smote_k,
            seed,
        }
    }
}

#[derive(Args, Debug)]
struct AugmentArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    augment: AugmentFlags,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum KernelName {
    Linear,
    Rbf,
    Quadratic,
}

impl KernelName {
    fn as_str(self) -> &'static str {
        match self {
            KernelName::Linear => "linear",
            KernelName::Rbf => "rbf",
            KernelName::Quadratic => "quadratic",
        }
    }
}

#[derive(Args, Debug, Clone)]
struct ModelFlags {
    /// Box constraint C.
    #[arg(long = "c", default_value_t = 1.0)]
    c_penalty: f64,
    /// RBF width; defaults to 1 / (d · mean feature variance).
    #[arg(long)]
    gamma: Option<f64>,
    /// Quadratic kernel offset.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    coef0: f64,
    #[arg(long, default_value_t = dataset::DEFAULT_TRAIN_FRACTION)]
    train_fraction: f64,
    #[command(flatten)]
    augment: AugmentFlags,
}

impl ModelFlags {
    fn experiment(&self, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            train_fraction: self.train_fraction,
            augment: self.augment.options(seed),
            solver: TrainConfig {
                c_penalty: self.c_penalty,
                seed,
                ..TrainConfig::default()
            },
            gamma: self.gamma,
            coef0: self.coef0,
            seed,
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = KernelName::Quadratic)]
    kernel: KernelName,
    #[command(flatten)]
    model: ModelFlags,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Fixture {
    /// The 17/22/1/1 confusion matrix of the final quadratic model.
    Fig5,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long, required_unless_present = "fixture")]
    model: Option<PathBuf>,
    #[arg(long, required_unless_present = "fixture")]
    data: Option<PathBuf>,
    /// Print the scores of a stored confusion matrix instead of evaluating.
    #[arg(long, value_enum, conflicts_with_all = ["model", "data"])]
    fixture: Option<Fixture>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// `all` or a comma-separated list of kernel names.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    kernels: Vec<String>,
    #[command(flatten)]
    model: ModelFlags,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn write(dir: &Path, name: &str, contents: &[u8]) -> CliResult<PathBuf> {
    let path = dir.join(name);
    write_atomic(&path, contents)?;
    Ok(path)
}

fn simulate(args: &SimulateArgs, seed: u64, out: &Path) -> CliResult<()> {
    let config = SimulationConfig {
        count: args.count,
        breaths_min: args.breaths_min,
        breaths_max: args.breaths_max,
        amplitude_min: args.amplitude_mm_min * 1e-3,
        amplitude_max: args.amplitude_mm_max * 1e-3,
        snr_db: args.snr_db,
        seed,
        ..SimulationConfig::default()
    };
    let cohort = pipeline::simulate_records(&default_paper_params(), &config)?;
    write(out, "phases.csv", dataset::to_csv_string(&cohort.records)?.as_bytes())?;
    write(out, "manifest.csv", pipeline::manifest_csv(&cohort.manifest).as_bytes())?;
    let abnormal = cohort.records.iter().filter(|r| r.label == Label::Abnormal).count();
    println!(
        "simulated {} subjects ({} normal, {abnormal} abnormal)",
        cohort.records.len(),
        cohort.records.len() - abnormal
    );
    Ok(())
}

fn augment(args: &AugmentArgs, seed: u64, out: &Path) -> CliResult<()> {
    let text = fs::read_to_string(&args.input).map_err(|e| Error::Io {
        path: args.input.clone(),
        source: e,
    })?;
    let records = dataset::from_csv_str(&text)?;
    let options = args.augment.options(seed);
    let bytes = if options.is_noop() {
        text.into_bytes()
    } else {
        dataset::to_csv_string(&pipeline::augment(&records, &options)?)?.into_bytes()
    };
    write(out, "augmented.csv", &bytes)?;
    Ok(())
}

fn split_manifest(prepared: &pipeline::PreparedSplit, records: &[PhaseRecord]) -> String {
    let validation: std::collections::HashSet<&str> = prepared.validation.iter().map(|r| r.id.as_str()).collect();
    let mut out = String::from("id,set\n");
    for r in records {
        let set = if validation.contains(r.id.as_str()) {
            "validation"
        } else {
            "train"
        };
        out.push_str(&format!("{},{set}\n", r.id));
    }
    out
}

fn train(args: &TrainArgs, seed: u64, out: &Path) -> CliResult<()> {
    let records = dataset::load_csv(&args.input)?;
    let config = args.model.experiment(seed);
    let prepared = pipeline::prepare(&records, &config)?;
    let kernel = pipeline::kernel_from_name(args.kernel.as_str(), &config, &prepared.train_ready)?;
    let model = pipeline::train_prepared(&prepared, kernel, &config)?;
    write(out, "model.svm", svm::model_to_string(&model).as_bytes())?;
    write(out, "split.csv", split_manifest(&prepared, &records).as_bytes())?;
    write(
        out,
        "validation.csv",
        dataset::to_csv_string(&prepared.validation)?.as_bytes(),
    )?;
    println!(
        "trained {} kernel on {} records: {} support vectors",
        kernel.name(),
        prepared.train_ready.len(),
        model.num_support_vectors()
    );
    Ok(())
}

fn percent(v: respira_core::Result<f64>) -> String {
    v.map(|x| format!("{:.2}", 100.0 * x)).unwrap_or_else(|_| "n/a".into())
}

fn summary(cm: &ConfusionMatrix) -> String {
    [cm.accuracy(), cm.precision(), cm.recall(), cm.f1()]
        .into_iter()
        .map(percent)
        .collect::<Vec<_>>()
        .join("/")
}

fn evaluate(args: &EvaluateArgs, out: &Path) -> CliResult<()> {
    if let Some(Fixture::Fig5) = args.fixture {
        let cm = ConfusionMatrix::new(17, 22, 1, 1);
        println!("{}", summary(&cm));
        return Ok(());
    }
    let (Some(model_path), Some(data_path)) = (&args.model, &args.data) else {
        return Err(CliError::Usage("--model and --data are required".into()));
    };
    let model = svm::load_model(model_path).map_err(|e| match e {
        e @ (Error::Parse(_) | Error::ModelVersion(_)) => {
            CliError::Usage(format!("--model {} is not a model file: {e}", model_path.display()))
        }
        other => CliError::Run(other),
    })?;
    let records = dataset::load_csv(data_path)?;
    let scored = pipeline::score(&model, &records)?;
    let labeled: Vec<_> = scored
        .iter()
        .filter(|s| s.actual != Label::Unlabeled)
        .cloned()
        .collect();
    let cm = pipeline::confusion_of(&labeled)?;
    let row = ScoreRow {
        kernel: model.kernel.name().to_string(),
        confusion: cm,
        support_vectors: model.num_support_vectors(),
    };
    write(out, "metrics.csv", metrics_csv(&[row]).as_bytes())?;
    write(out, "confusion.csv", confusion_csv(&cm).as_bytes())?;
    write(out, "scores.csv", pipeline::scores_csv(&scored).as_bytes())?;
    println!("accuracy/precision/recall/f1 (%): {}", summary(&cm));
    Ok(())
}

fn compare(args: &CompareArgs, seed: u64, out: &Path) -> CliResult<()> {
    let mut kernels: Vec<&str> = Vec::new();
    for name in &args.kernels {
        match name.as_str() {
            "all" => kernels.extend(svm::KERNEL_NAMES),
            k if svm::KERNEL_NAMES.contains(&k) => kernels.push(k),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown kernel {other:?}; expected all or one of {}",
                    svm::KERNEL_NAMES.join(", ")
                )))
            }
        }
    }
    let records = dataset::load_csv(&args.input)?;
    let config = args.model.experiment(seed);
    let prepared = pipeline::prepare(&records, &config)?;
    let runs = pipeline::compare(&prepared, &kernels, &config)?;
    let rows: Vec<ScoreRow> = runs.into_iter().map(|r| r.row).collect();
    write(out, "compare.csv", metrics_csv(&rows).as_bytes())?;
    for r in &rows {
        println!(
            "{:<9} {} ({} support vectors)",
            r.kernel,
            summary(&r.confusion),
            r.support_vectors
        );
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    fs::create_dir_all(&cli.out).map_err(|e| Error::Io {
        path: cli.out.clone(),
        source: e,
    })?;
    match &cli.command {
        Command::Simulate(args) => simulate(args, cli.seed, &cli.out),
        Command::Augment(args) => augment(args, cli.seed, &cli.out),
        Command::Train(args) => train(args, cli.seed, &cli.out),
        Command::Evaluate(args) => evaluate(args, &cli.out),
        Command::Compare(args) => compare(args, cli.seed, &cli.out),
    }
}

/// Collapses clap's multi-line message into one line.
fn one_line(message: &str) -> String {
    message
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("For more information"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", one_line(&e.render().to_string()));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
