//! Cross-validated transfer experiments.
//!
//! Every fold draws fresh source, target-training and target-test samples
//! from its own seeded streams, trains the source models, and then, for each
//! target sample count `N`, adapts with every requested method and measures
//! the test error. Folds run in parallel; aggregation follows fold order, so
//! errors are identical between runs and between execution modes.

mod baselines;
mod report;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datagen;
use crate::dataset::Dataset;
use crate::error::{invalid_config, invalid_input, Error, Result};
use crate::lvq::{self, LvqModel, LvqTrainingConfig, MetricKind, Sigmoid};
use crate::optim::SolverConfig;
use crate::par::{self, Execution};
use crate::rng;
use crate::transfer::{em_transfer, TransferConfig};

pub use baselines::{
    baseline_gmlvq_transfer, baseline_naive, baseline_retrain, gmlvq_transfer, retrain, GlvqTransferFit,
    GlvqTransferObjective, Retrained,
};
pub use report::{read_report_csv, report_from_csv_reader, report_to_csv_writer, write_report_csv};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// The GMLVQ source model applied to raw target data.
    Naive,
    /// The LGMLVQ source model applied to raw target data.
    NaiveLoc,
    /// EM transfer for the GMLVQ source model (shared precision, closed form).
    Em,
    /// EM transfer for the LGMLVQ source model (local precisions, l-BFGS).
    EmLoc,
    /// A new GMLVQ model trained on target data only.
    Retrain,
    /// A new LGMLVQ model trained on target data only.
    RetrainLoc,
    /// `H` fitted on the GLVQ cost of the GMLVQ source model.
    GmlvqTransfer,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Naive,
        Method::NaiveLoc,
        Method::Em,
        Method::EmLoc,
        Method::Retrain,
        Method::RetrainLoc,
        Method::GmlvqTransfer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::NaiveLoc => "naive_loc",
            Method::Em => "em",
            Method::EmLoc => "em_loc",
            Method::Retrain => "retrain",
            Method::RetrainLoc => "retrain_loc",
            Method::GmlvqTransfer => "gmlvq_transfer",
        }
    }

    /// Source model family the method relies on, if any.
    pub fn source_family(self) -> Option<MetricKind> {
        match self {
            Method::Naive | Method::Em | Method::GmlvqTransfer => Some(MetricKind::Shared),
            Method::NaiveLoc | Method::EmLoc => Some(MetricKind::Local),
            Method::Retrain | Method::RetrainLoc => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| invalid_input(format!("unknown method '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetChoice {
    #[default]
    Toy,
    Cigars,
    /// User-supplied CSV files.
    Csv,
}

/// Experiment settings. Optional fields fall back to per-dataset defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetChoice,
    pub source_csv: Option<PathBuf>,
    pub target_csv: Option<PathBuf>,
    /// Held-out target data; without it every fold holds out a seeded half of `target_csv`.
    pub test_csv: Option<PathBuf>,
    /// Points per class for generated data (toy 100, cigars 1000).
    pub points_per_class: Option<usize>,
    pub methods: Option<Vec<Method>>,
    /// Target training sample counts, strictly ascending.
    pub n_grid: Option<Vec<usize>>,
    /// Toy 10, cigars 30, CSV 10.
    pub folds: Option<usize>,
    /// Classes removed from the target training data (default: the last class of generated data).
    pub exclude_classes: Option<Vec<usize>>,
    pub seed: u64,
    /// Bandwidth for the LVQ-to-mixture conversion; default derives it from the prototypes.
    pub sigma: Option<f64>,
    pub epsilon: f64,
    pub ridge: Option<f64>,
    pub max_iterations: usize,
    pub prototypes_per_class: usize,
    pub epochs: usize,
    pub learning_rate_prototypes: f64,
    pub learning_rate_omega: f64,
    pub sigmoid_slope: f64,
    /// When false all times are reported as zero and the report is reproducible bit for bit.
    pub record_times: bool,
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let lvq = LvqTrainingConfig::default();
        let transfer = TransferConfig::default();
        Self {
            dataset: DatasetChoice::Toy,
            source_csv: None,
            target_csv: None,
            test_csv: None,
            points_per_class: None,
            methods: None,
            n_grid: None,
            folds: None,
            exclude_classes: None,
            seed: 0,
            sigma: None,
            epsilon: transfer.epsilon,
            ridge: transfer.ridge,
            max_iterations: transfer.max_iterations,
            prototypes_per_class: lvq.prototypes_per_class,
            epochs: lvq.epochs,
            learning_rate_prototypes: lvq.learning_rate_prototypes,
            learning_rate_omega: lvq.learning_rate_omega,
            sigmoid_slope: lvq.sigmoid.slope,
            record_times: true,
            output: None,
            exec: Execution::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn toy() -> Self {
        Self { dataset: DatasetChoice::Toy, ..Self::default() }
    }

    pub fn cigars() -> Self {
        Self { dataset: DatasetChoice::Cigars, ..Self::default() }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }

    /// Reads a TOML config; relative CSV paths are resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.source_csv, &mut cfg.target_csv, &mut cfg.test_csv].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn resolved_methods(&self) -> Vec<Method> {
        self.methods.clone().unwrap_or_else(|| match self.dataset {
            DatasetChoice::Toy | DatasetChoice::Csv => {
                vec![Method::Naive, Method::Em, Method::Retrain, Method::GmlvqTransfer]
            }
            DatasetChoice::Cigars => Method::ALL.to_vec(),
        })
    }

    pub fn resolved_n_grid(&self) -> Vec<usize> {
        self.n_grid.clone().unwrap_or_else(|| match self.dataset {
            DatasetChoice::Cigars => vec![4, 8, 12, 16, 32, 64],
            _ => vec![4, 8, 16, 32, 64],
        })
    }

    pub fn resolved_folds(&self) -> usize {
        self.folds.unwrap_or(match self.dataset {
            DatasetChoice::Cigars => 30,
            _ => 10,
        })
    }

    pub fn resolved_points_per_class(&self) -> usize {
        self.points_per_class.unwrap_or(match self.dataset {
            DatasetChoice::Cigars => 1000,
            _ => 100,
        })
    }

    pub fn resolved_exclude_classes(&self) -> Vec<usize> {
        self.exclude_classes.clone().unwrap_or_else(|| match self.dataset {
            DatasetChoice::Csv => vec![],
            _ => vec![3],
        })
    }

    pub fn lvq_config(&self, seed: u64) -> LvqTrainingConfig {
        LvqTrainingConfig {
            prototypes_per_class: self.prototypes_per_class,
            epochs: self.epochs,
            learning_rate_prototypes: self.learning_rate_prototypes,
            learning_rate_omega: self.learning_rate_omega,
            sigmoid: Sigmoid { slope: self.sigmoid_slope },
            seed,
        }
    }

    pub fn transfer_config(&self) -> TransferConfig {
        TransferConfig {
            epsilon: self.epsilon,
            ridge: self.ridge,
            max_iterations: self.max_iterations,
            exec: Execution::Sequential,
            ..TransferConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.resolved_n_grid();
        if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid_config("n_grid must be non-empty, positive and strictly ascending"));
        }
        if self.resolved_folds() < 2 {
            return Err(invalid_config("at least two folds are required"));
        }
        let methods = self.resolved_methods();
        if methods.is_empty() {
            return Err(invalid_config("no methods selected"));
        }
        if (1..methods.len()).any(|i| methods[..i].contains(&methods[i])) {
            return Err(invalid_config("methods must not repeat"));
        }
        if self.resolved_points_per_class() == 0 {
            return Err(invalid_config("points_per_class must be positive"));
        }
        if self.sigma.is_some_and(|s| !(s > 0.0) || !s.is_finite()) {
            return Err(invalid_config("sigma must be positive and finite"));
        }
        if !(self.epsilon > 0.0) || self.max_iterations == 0 {
            return Err(invalid_config("epsilon must be positive and max_iterations at least 1"));
        }
        if self.ridge.is_some_and(|r| !(r >= 0.0) || !r.is_finite()) {
            return Err(invalid_config("ridge must be finite and non-negative"));
        }
        if self.dataset == DatasetChoice::Csv && (self.source_csv.is_none() || self.target_csv.is_none()) {
            return Err(invalid_config("csv experiments need source_csv and target_csv"));
        }
        self.lvq_config(0).validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Success {
        error: f64,
        seconds: f64,
        /// EM iterations, for the EM methods.
        iterations: Option<usize>,
        converged: Option<bool>,
    },
    Failed(String),
}

impl Outcome {
    pub fn error(&self) -> Option<f64> {
        match self {
            Outcome::Success { error, .. } => Some(*error),
            Outcome::Failed(_) => None,
        }
    }
}

/// Result of one method at one `N` in one fold.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldRecord {
    pub fold: usize,
    pub n: usize,
    pub method: Method,
    pub outcome: Outcome,
}

/// Mean and standard deviation over successful folds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub err_mean: f64,
    pub err_std: f64,
    pub time_mean: f64,
    pub time_std: f64,
    /// Successful folds.
    pub folds: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub n: usize,
    /// One entry per method, in the report's method order.
    pub cells: Vec<Summary>,
}

/// Source model test error over folds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceSummary {
    pub family: MetricKind,
    pub err_mean: f64,
    pub err_std: f64,
    pub failures: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentReport {
    pub methods: Vec<Method>,
    pub rows: Vec<ReportRow>,
    pub source: Vec<SourceSummary>,
    /// Per-fold raw outcomes (not part of the CSV).
    pub records: Vec<FoldRecord>,
}

impl ExperimentReport {
    pub fn summary(&self, method: Method, n: usize) -> Option<&Summary> {
        let col = self.methods.iter().position(|&m| m == method)?;
        self.rows.iter().find(|r| r.n == n).map(|r| &r.cells[col])
    }

    pub fn source_summary(&self, family: MetricKind) -> Option<&SourceSummary> {
        self.source.iter().find(|s| s.family == family)
    }

    pub fn records_for(&self, method: Method, n: usize) -> impl Iterator<Item = &FoldRecord> {
        self.records.iter().filter(move |r| r.method == method && r.n == n)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

struct FoldData {
    source: Dataset,
    source_test: Dataset,
    pool: Dataset,
    test: Dataset,
}

/// Seed namespaces for fold-level streams.
const FOLD_NS: u16 = 5;
const SUBSAMPLE_NS: u16 = 6;

fn load_csv_inputs(cfg: &ExperimentConfig) -> Result<Option<(Dataset, Dataset, Option<Dataset>)>> {
    if cfg.dataset != DatasetChoice::Csv {
        return Ok(None);
    }
    let source = Dataset::read_csv(cfg.source_csv.as_ref().expect("validated"))?;
    let target = Dataset::read_csv(cfg.target_csv.as_ref().expect("validated"))?;
    let test = cfg.test_csv.as_ref().map(Dataset::read_csv).transpose()?;
    Ok(Some((source, target, test)))
}

fn fold_data(
    cfg: &ExperimentConfig,
    csv: &Option<(Dataset, Dataset, Option<Dataset>)>,
    fold: usize,
) -> Result<FoldData> {
    let seed = |sub| rng::derive_seed(cfg.seed, FOLD_NS, fold as u32, sub);
    let ppc = cfg.resolved_points_per_class();
    Ok(match (cfg.dataset, csv) {
        (DatasetChoice::Toy, _) => FoldData {
            source: datagen::toy_source(ppc, seed(0))?,
            source_test: datagen::toy_source(ppc, seed(1))?,
            pool: datagen::toy_target(ppc, seed(2))?,
            test: datagen::toy_target(ppc, seed(3))?,
        },
        (DatasetChoice::Cigars, _) => FoldData {
            source: datagen::cigars_source(ppc, seed(0))?,
            source_test: datagen::cigars_source(ppc, seed(1))?,
            pool: datagen::cigars_target(ppc, seed(2))?,
            test: datagen::cigars_target(ppc, seed(3))?,
        },
        (DatasetChoice::Csv, Some((source, target, test))) => {
            let (pool, test) = match test {
                Some(t) => (target.clone(), t.clone()),
                None => split_half(target, seed(2))?,
            };
            FoldData { source: source.clone(), source_test: source.clone(), pool, test }
        }
        (DatasetChoice::Csv, None) => unreachable!("csv inputs are loaded before the folds"),
    })
}

/// Seeded split into a training pool and a held-out half.
fn split_half(data: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    use rand::seq::SliceRandom;
    if data.len() < 2 {
        return Err(invalid_input("target data needs at least two points to hold out a test set"));
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut rng::stream(seed, 0));
    let (test, pool) = idx.split_at(data.len() / 2);
    let (mut pool, mut test) = (pool.to_vec(), test.to_vec());
    pool.sort_unstable();
    test.sort_unstable();
    Ok((data.select(&pool)?, data.select(&test)?))
}

fn timed<T>(record: bool, f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    let secs = if record { start.elapsed().as_secs_f64() } else { 0.0 };
    Ok((out, secs))
}

struct SourceModels {
    shared: Option<Result<LvqModel>>,
    local: Option<Result<LvqModel>>,
}

impl SourceModels {
    fn get(&self, kind: MetricKind) -> Result<&LvqModel> {
        let slot = match kind {
            MetricKind::Local => &self.local,
            _ => &self.shared,
        };
        match slot {
            Some(Ok(m)) => Ok(m),
            Some(Err(e)) => Err(Error::InvalidResult(format!("source model training failed: {e}"))),
            None => Err(Error::InvalidResult("source model was not trained".into())),
        }
    }
}

fn run_method(
    cfg: &ExperimentConfig,
    method: Method,
    models: &SourceModels,
    train: &Dataset,
    test: &Dataset,
    retrain_seed: u64,
) -> Result<Outcome> {
    let record = cfg.record_times;
    match method {
        Method::Naive | Method::NaiveLoc => {
            let model = models.get(method.source_family().expect("naive has a source"))?;
            Ok(Outcome::Success {
                error: baseline_naive(model, test)?,
                seconds: 0.0,
                iterations: None,
                converged: None,
            })
        }
        Method::Em | Method::EmLoc => {
            let model = models.get(method.source_family().expect("em has a source"))?;
            let sigma = match cfg.sigma {
                Some(s) => s,
                None => lvq::default_sigma(model)?,
            };
            let gmm = lvq::to_lgmm(model, sigma)?;
            let tcfg = cfg.transfer_config();
            let (map, seconds) = timed(record, || em_transfer(&gmm, train, &tcfg))?;
            Ok(Outcome::Success {
                error: model.error_rate(&map.apply_dataset(test)?),
                seconds,
                iterations: Some(map.iterations),
                converged: Some(map.converged()),
            })
        }
        Method::Retrain | Method::RetrainLoc => {
            let kind = if method == Method::Retrain { MetricKind::Shared } else { MetricKind::Local };
            let lcfg = cfg.lvq_config(retrain_seed);
            let (fit, seconds) = timed(record, || retrain(train, kind, &lcfg))?;
            Ok(Outcome::Success { error: fit.error_rate(test), seconds, iterations: None, converged: None })
        }
        Method::GmlvqTransfer => {
            let model = models.get(MetricKind::Shared)?;
            let phi = Sigmoid { slope: cfg.sigmoid_slope };
            let solver = SolverConfig::default();
            let (fit, seconds) = timed(record, || gmlvq_transfer(model, train, phi, &solver))?;
            Ok(Outcome::Success {
                error: model.error_rate(&test.mapped(&fit.h)?),
                seconds,
                iterations: Some(fit.iterations),
                converged: None,
            })
        }
    }
}

struct FoldResult {
    records: Vec<FoldRecord>,
    source_errors: Vec<(MetricKind, Option<f64>)>,
}

fn run_fold(
    cfg: &ExperimentConfig,
    csv: &Option<(Dataset, Dataset, Option<Dataset>)>,
    fold: usize,
    grid: &[usize],
    methods: &[Method],
) -> FoldResult {
    let fail_all = |msg: String| FoldResult {
        records: grid
            .iter()
            .flat_map(|&n| methods.iter().map(move |&m| (n, m)))
            .map(|(n, method)| FoldRecord { fold, n, method, outcome: Outcome::Failed(msg.clone()) })
            .collect(),
        source_errors: vec![],
    };
    let data = match fold_data(cfg, csv, fold) {
        Ok(d) => d,
        Err(e) => return fail_all(e.to_string()),
    };
    let excluded = cfg.resolved_exclude_classes();
    let pool = match datagen::exclude_classes(&data.pool, &excluded) {
        Ok(p) => p,
        Err(e) => return fail_all(e.to_string()),
    };

    let needs = |kind| methods.iter().any(|m| m.source_family() == Some(kind));
    let source_seed = rng::derive_seed(cfg.seed, FOLD_NS, fold as u32, 4);
    let train_source = |kind| lvq::train(&data.source, &cfg.lvq_config(source_seed), kind);
    let models = SourceModels {
        shared: needs(MetricKind::Shared).then(|| train_source(MetricKind::Shared)),
        local: needs(MetricKind::Local).then(|| train_source(MetricKind::Local)),
    };
    let source_errors = [(MetricKind::Shared, &models.shared), (MetricKind::Local, &models.local)]
        .into_iter()
        .filter_map(|(kind, m)| m.as_ref().map(|m| (kind, m.as_ref().ok().map(|m| m.error_rate(&data.source_test)))))
        .collect();

    let mut records = Vec::with_capacity(grid.len() * methods.len());
    for (i, &n) in grid.iter().enumerate() {
        let sub_seed = rng::derive_seed(cfg.seed, SUBSAMPLE_NS, fold as u32, i as u16);
        let retrain_seed = rng::derive_seed(cfg.seed, FOLD_NS, fold as u32, 5 + i as u16);
        let train = datagen::subsample_balanced(&pool, n, sub_seed);
        for &method in methods {
            let outcome = match &train {
                Ok(t) => run_method(cfg, method, &models, t, &data.test, retrain_seed)
                    .unwrap_or_else(|e| Outcome::Failed(e.to_string())),
                Err(e) => Outcome::Failed(e.to_string()),
            };
            records.push(FoldRecord { fold, n, method, outcome });
        }
    }
    FoldResult { records, source_errors }
}

/// Runs the cross-validated protocol and aggregates per `(method, N)`.
///
/// Method failures are kept as [`Outcome::Failed`] records and counted in
/// [`Summary::failures`]; they never abort the run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let grid = config.resolved_n_grid();
    let methods = config.resolved_methods();
    let folds = config.resolved_folds();
    let csv = load_csv_inputs(config)?;

    if config.record_times {
        // warm-up: one-time allocation and page-fault costs stay out of the timings
        run_fold(config, &csv, 0, &grid[..1], &methods);
    }
    let results = par::map_indexed(config.exec, folds, |f| run_fold(config, &csv, f, &grid, &methods));

    let records: Vec<FoldRecord> = results.iter().flat_map(|r| r.records.iter().cloned()).collect();
    let rows = grid
        .iter()
        .map(|&n| ReportRow {
            n,
            cells: methods
                .iter()
                .map(|&m| {
                    let (mut errs, mut times, mut failures) = (vec![], vec![], 0);
                    for r in records.iter().filter(|r| r.n == n && r.method == m) {
                        match &r.outcome {
                            Outcome::Success { error, seconds, .. } => {
                                errs.push(*error);
                                times.push(*seconds);
                            }
                            Outcome::Failed(_) => failures += 1,
                        }
                    }
                    let (err_mean, err_std) = mean_std(&errs);
                    let (time_mean, time_std) = mean_std(&times);
                    Summary { err_mean, err_std, time_mean, time_std, folds: errs.len(), failures }
                })
                .collect(),
        })
        .collect();

    let source = [MetricKind::Shared, MetricKind::Local]
        .into_iter()
        .filter_map(|kind| {
            let all: Vec<Option<f64>> = results
                .iter()
                .flat_map(|r| r.source_errors.iter().filter(|(k, _)| *k == kind).map(|(_, e)| *e))
                .collect();
            if all.is_empty() {
                return None;
            }
            let ok: Vec<f64> = all.iter().flatten().copied().collect();
            let (err_mean, err_std) = mean_std(&ok);
            Some(SourceSummary { family: kind, err_mean, err_std, failures: all.len() - ok.len() })
        })
        .collect();

    Ok(ExperimentReport { methods, rows, source, records })
}
