use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use emtl::datagen;
use emtl::document::Document;
use emtl::experiment::{self, ExperimentConfig, ExperimentReport, Method};
use emtl::lgmm::{fit_lgmm, LgmmFitConfig};
use emtl::lvq::{self, LvqModel, LvqTrainingConfig, MetricKind};
use emtl::transfer::{em_transfer, TransferConfig, TransferMap};
use emtl::{Dataset, Error, LabeledGmm, PrecisionPolicy, Result};

/// EM transfer learning for labeled Gaussian mixtures and LVQ classifiers.
#[derive(Parser, Debug)]
#[command(name = "emtl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample an artificial dataset and write it as CSV.
    Generate(GenerateArgs),
    /// Fit a source model on a labeled CSV and write it as a JSON document.
    Train(TrainArgs),
    /// Learn a transfer map from target CSV data to a source model.
    Transfer(TransferArgs),
    /// Run the cross-validated transfer experiment and write the report CSV.
    Benchmark(BenchmarkArgs),
    /// Classify a CSV with a model, optionally through a transfer map.
    Predict(PredictArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GeneratedSet {
    Toy,
    ToyAmbiguous,
    Cigars,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Role {
    Source,
    Target,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "toy")]
    dataset: GeneratedSet,
    #[arg(long, value_enum, default_value = "source")]
    role: Role,
    /// Points per class (per mixture component).
    #[arg(long, default_value_t = 100)]
    points_per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Labels to drop from the output, comma separated.
    #[arg(long, value_delimiter = ',')]
    exclude_classes: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Glvq,
    Gmlvq,
    Lgmlvq,
    Lgmm,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Labeled training data (CSV with x_1..x_d,label).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "gmlvq")]
    method: Family,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Prototypes (LVQ) or components (lgmm) per class.
    #[arg(long, default_value_t = 1)]
    per_class: usize,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    /// Fit one precision matrix shared by all lgmm components.
    #[arg(long)]
    shared: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TransferArgs {
    /// Source model document (lvq or lgmm).
    #[arg(long)]
    model: PathBuf,
    /// Labeled target training data.
    #[arg(long)]
    data: PathBuf,
    /// Bandwidth for converting an LVQ model; defaults to 0.05 x median prototype distance.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BenchSet {
    Toy,
    Cigars,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// TOML experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    dataset: Option<BenchSet>,
    #[arg(long)]
    seed: Option<u64>,
    /// Methods, comma separated (naive, naive_loc, em, em_loc, retrain, retrain_loc, gmlvq_transfer).
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    n_grid: Vec<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    exclude_classes: Option<Vec<usize>>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    ridge: Option<f64>,
    /// Report all times as zero so the CSV is reproducible bit for bit.
    #[arg(long)]
    no_times: bool,
    /// Run folds sequentially.
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Model document (lvq or lgmm).
    #[arg(long)]
    model: PathBuf,
    /// Data to classify; its label column is used to report the error rate.
    #[arg(long)]
    data: PathBuf,
    /// Transfer map document applied before classification.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Write the data with predicted labels to this CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let spec = match (a.dataset, a.role) {
        (GeneratedSet::Toy, Role::Source) => datagen::toy_source_spec(a.points_per_class, a.seed),
        (GeneratedSet::Toy, Role::Target) => datagen::toy_target_spec(a.points_per_class, a.seed),
        (GeneratedSet::ToyAmbiguous, Role::Source) => datagen::toy_ambiguous_spec(a.points_per_class, a.seed),
        (GeneratedSet::ToyAmbiguous, Role::Target) => datagen::GeneratorSpec {
            labels: datagen::toy_ambiguous_spec(0, 0).labels,
            ..datagen::toy_target_spec(a.points_per_class, a.seed)
        },
        (GeneratedSet::Cigars, Role::Source) => datagen::cigars_source_spec(a.points_per_class, a.seed),
        (GeneratedSet::Cigars, Role::Target) => datagen::cigars_target_spec(a.points_per_class, a.seed),
    };
    let mut data = datagen::sample(&spec)?;
    if !a.exclude_classes.is_empty() {
        data = datagen::exclude_classes(&data, &a.exclude_classes)?;
    }
    data.write_csv(&a.out)?;
    println!("wrote {} points of dimension {} to {}", data.len(), data.dim(), a.out.display());
    Ok(())
}

fn train(a: &TrainArgs) -> Result<()> {
    let data = Dataset::read_csv(&a.data)?;
    let doc = match a.method {
        Family::Lgmm => {
            let cfg = LgmmFitConfig {
                components_per_label: a.per_class,
                shared_precision: a.shared,
                seed: a.seed,
                ..LgmmFitConfig::default()
            };
            let fit = fit_lgmm(&data, &cfg)?;
            let err = fit.model.evaluator(cfg.policy)?.error_rate(&data)?;
            println!("lgmm: {} EM iterations, training error {err:.4}", fit.iterations);
            Document::from(&fit.model)
        }
        family => {
            let kind = match family {
                Family::Glvq => MetricKind::Identity,
                Family::Gmlvq => MetricKind::Shared,
                _ => MetricKind::Local,
            };
            let cfg = LvqTrainingConfig {
                prototypes_per_class: a.per_class,
                epochs: a.epochs,
                seed: a.seed,
                ..LvqTrainingConfig::default()
            };
            let model = lvq::train(&data, &cfg, kind)?;
            println!("{family:?}: training error {:.4}", model.error_rate(&data));
            Document::from(&model)
        }
    };
    doc.write(&a.out)
}

enum SourceModel {
    Lvq(LvqModel),
    Gmm(LabeledGmm),
}

impl SourceModel {
    fn read(path: &Path) -> Result<Self> {
        match Document::read(path)? {
            d @ Document::Lvq(_) => Ok(SourceModel::Lvq(d.into_lvq()?)),
            d @ Document::Lgmm(_) => Ok(SourceModel::Gmm(d.into_lgmm()?)),
            Document::TransferMap(_) => {
                Err(Error::InvalidInput(format!("{} holds a transfer map, not a model", path.display())))
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            SourceModel::Lvq(m) => m.dim(),
            SourceModel::Gmm(m) => m.dim(),
        }
    }

    fn to_gmm(&self, sigma: Option<f64>) -> Result<LabeledGmm> {
        match self {
            SourceModel::Lvq(m) => {
                let s = match sigma {
                    Some(s) => s,
                    None => lvq::default_sigma(m)?,
                };
                lvq::to_lgmm(m, s)
            }
            SourceModel::Gmm(m) => Ok(m.clone()),
        }
    }

    fn classify_all(&self, data: &Dataset) -> Result<Vec<usize>> {
        match self {
            SourceModel::Lvq(m) => Ok((0..data.len()).map(|j| m.classify(&data.point(j))).collect()),
            SourceModel::Gmm(m) => {
                let ev = m.evaluator(PrecisionPolicy::default())?;
                (0..data.len()).map(|j| ev.classify(&data.point(j))).collect()
            }
        }
    }
}

fn transfer(a: &TransferArgs) -> Result<()> {
    let source = SourceModel::read(&a.model)?;
    let target = Dataset::read_csv(&a.data)?;
    let gmm = source.to_gmm(a.sigma)?;
    let defaults = TransferConfig::default();
    let cfg = TransferConfig {
        epsilon: a.epsilon.unwrap_or(defaults.epsilon),
        ridge: a.ridge.or(defaults.ridge),
        max_iterations: a.max_iterations.unwrap_or(defaults.max_iterations),
        ..defaults
    };
    let map = em_transfer(&gmm, &target, &cfg)?;
    println!(
        "transfer: {} iterations, {}, final E_Q {}",
        map.iterations,
        if map.converged() { "converged" } else { "not converged" },
        map.final_eq_error().map_or("n/a".into(), |e| format!("{e:.6e}"))
    );
    Document::from(&map).write(&a.out)
}

fn benchmark(a: &BenchmarkArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(d) = a.dataset {
        cfg.dataset = match d {
            BenchSet::Toy => emtl::experiment::DatasetChoice::Toy,
            BenchSet::Cigars => emtl::experiment::DatasetChoice::Cigars,
        };
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if !a.method.is_empty() {
        cfg.methods = Some(a.method.iter().map(|m| m.parse()).collect::<Result<Vec<Method>>>()?);
    }
    if !a.n_grid.is_empty() {
        cfg.n_grid = Some(a.n_grid.clone());
    }
    cfg.folds = a.folds.or(cfg.folds);
    cfg.exclude_classes = a.exclude_classes.clone().or(cfg.exclude_classes);
    cfg.sigma = a.sigma.or(cfg.sigma);
    cfg.epsilon = a.epsilon.unwrap_or(cfg.epsilon);
    cfg.ridge = a.ridge.or(cfg.ridge);
    if a.no_times {
        cfg.record_times = false;
    }
    if a.sequential {
        cfg.exec = emtl::Execution::Sequential;
    }
    cfg.output = a.out.clone().or(cfg.output);

    let report = experiment::run_experiment(&cfg)?;
    print_report(&report);
    if let Some(out) = &cfg.output {
        experiment::write_report_csv(&report, out)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn print_report(report: &ExperimentReport) {
    for s in &report.source {
        println!("source {:?}: error {:.4} +- {:.4}", s.family, s.err_mean, s.err_std);
    }
    print!("{:>5}", "n");
    for m in &report.methods {
        print!("  {:>22}", m.name());
    }
    println!();
    for row in &report.rows {
        print!("{:>5}", row.n);
        for c in &row.cells {
            let fail = if c.failures > 0 { format!(" ({} failed)", c.failures) } else { String::new() };
            print!("  {:>22}", format!("{:.4}+-{:.4}{fail}", c.err_mean, c.err_std));
        }
        println!();
    }
}

fn predict(a: &PredictArgs) -> Result<()> {
    let model = SourceModel::read(&a.model)?;
    let mut data = Dataset::read_csv(&a.data)?;
    if let Some(p) = &a.map {
        let map: TransferMap = Document::read(p)?.into_transfer_map()?;
        data = map.apply_dataset(&data)?;
    } else if data.dim() != model.dim() {
        return Err(Error::InvalidInput(format!(
            "model expects dimension {} but data has {}; supply a transfer map",
            model.dim(),
            data.dim()
        )));
    }
    let predicted = model.classify_all(&data)?;
    let wrong = predicted.iter().zip(data.labels()).filter(|(p, y)| p != y).count();
    println!("error rate {:.6} ({wrong} of {})", wrong as f64 / data.len() as f64, data.len());
    if let Some(out) = &a.out {
        let original = Dataset::read_csv(&a.data)?;
        Dataset::new(original.points().clone(), predicted)?.write_csv(out)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Transfer(a) => transfer(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Predict(a) => predict(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
