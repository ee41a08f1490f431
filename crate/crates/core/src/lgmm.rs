//! Labeled Gaussian mixture models.
//!
//! A [`LabeledGmm`] couples every Gaussian component with a distribution over
//! class labels, `p(x, y) = Σ_k N(x | μ_k, Λ_k) P(y | k) P(k)`, and classifies
//! by the label posterior. All density math runs in log-space.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{invalid_config, invalid_input, Error, Result};
use crate::linalg::{compose, is_symmetric, log_sum_exp, quad_form, sym_eigen};
use crate::par::{self, Execution};
use crate::rng;

const SUM_TOL: f64 = 1e-9;

/// How precision matrices without full rank are made usable as densities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PrecisionPolicy {
    /// Raise every eigenvalue of `Λ_k` to at least `min_eigenvalue`.
    EigenFloor { min_eigenvalue: f64 },
    /// Use the product of the non-zero eigenvalues as determinant and `Λ_k`
    /// unchanged in the quadratic form.
    PseudoDeterminant,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy::EigenFloor { min_eigenvalue: Self::DEFAULT_MIN_EIGENVALUE }
    }
}

/// A precision matrix after applying a [`PrecisionPolicy`].
#[derive(Clone, Debug)]
pub struct ConditionedPrecision {
    pub precision: DMatrix<f64>,
    /// Eigenvalues entering the (pseudo-)determinant.
    pub eigenvalues: DVector<f64>,
    pub log_det: f64,
}

impl PrecisionPolicy {
    pub const DEFAULT_MIN_EIGENVALUE: f64 = 1e-6;
    pub const PSEUDO_DET_RELATIVE_THRESHOLD: f64 = 1e-12;

    /// Floor for a Gaussian whose standard deviation along any direction is
    /// at most `max_std`, i.e. precision eigenvalues ≥ 1/max_std².
    pub fn from_max_std(max_std: f64) -> Result<Self> {
        if !(max_std > 0.0) || !max_std.is_finite() {
            return Err(invalid_input("max_std must be positive and finite"));
        }
        Ok(PrecisionPolicy::EigenFloor { min_eigenvalue: 1.0 / (max_std * max_std) })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PrecisionPolicy::EigenFloor { min_eigenvalue } if !(min_eigenvalue > 0.0) => {
                Err(invalid_config("eigenvalue floor must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn condition(&self, lambda: &DMatrix<f64>) -> Result<ConditionedPrecision> {
        self.validate()?;
        let eig = sym_eigen(lambda);
        match *self {
            PrecisionPolicy::EigenFloor { min_eigenvalue } => {
                let floored = eig.eigenvalues.map(|v| v.max(min_eigenvalue));
                let precision =
                    if floored == eig.eigenvalues { lambda.clone() } else { compose(&eig.eigenvectors, &floored) };
                let log_det = floored.iter().map(|v| v.ln()).sum();
                Ok(ConditionedPrecision { precision, eigenvalues: floored, log_det })
            }
            PrecisionPolicy::PseudoDeterminant => {
                let max = eig.eigenvalues.max();
                if !(max > 0.0) {
                    return Err(Error::DegenerateModel("precision matrix has no positive eigenvalue".into()));
                }
                let threshold = Self::PSEUDO_DET_RELATIVE_THRESHOLD * max;
                let kept: Vec<f64> = eig.eigenvalues.iter().copied().filter(|&v| v > threshold).collect();
                let log_det = kept.iter().map(|v| v.ln()).sum();
                Ok(ConditionedPrecision { precision: lambda.clone(), eigenvalues: DVector::from_vec(kept), log_det })
            }
        }
    }
}

/// A labeled Gaussian mixture: means `μ_k`, precisions `Λ_k`, label
/// distributions `P(y | k)` (rows of a K×L matrix) and priors `P(k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledGmm {
    means: Vec<DVector<f64>>,
    precisions: Vec<DMatrix<f64>>,
    shared_precision: bool,
    label_cond: DMatrix<f64>,
    priors: DVector<f64>,
}

impl LabeledGmm {
    pub fn new(
        means: Vec<DVector<f64>>,
        precisions: Vec<DMatrix<f64>>,
        shared_precision: bool,
        label_cond: DMatrix<f64>,
        priors: DVector<f64>,
    ) -> Result<Self> {
        let k = means.len();
        if k == 0 {
            return Err(invalid_input("model needs at least one component"));
        }
        let m = means[0].len();
        if m == 0 {
            return Err(invalid_input("model dimension must be positive"));
        }
        if means.iter().any(|mu| mu.len() != m || mu.iter().any(|v| !v.is_finite())) {
            return Err(invalid_input("means must be finite and share one dimension"));
        }
        if precisions.len() != k {
            return Err(invalid_input(format!("{k} means but {} precisions", precisions.len())));
        }
        for (i, p) in precisions.iter().enumerate() {
            if p.nrows() != m || p.ncols() != m || p.iter().any(|v| !v.is_finite()) {
                return Err(invalid_input(format!("precision {i} must be a finite {m}x{m} matrix")));
            }
            if !is_symmetric(p, SUM_TOL) {
                return Err(invalid_input(format!("precision {i} is not symmetric")));
            }
            if sym_eigen(p).eigenvalues.min() < -SUM_TOL {
                return Err(invalid_input(format!("precision {i} has a negative eigenvalue")));
            }
        }
        if shared_precision && precisions.iter().any(|p| p != &precisions[0]) {
            return Err(invalid_input("shared_precision set but precisions differ"));
        }
        if label_cond.nrows() != k || label_cond.ncols() == 0 {
            return Err(invalid_input("label_cond must be K x L with L >= 1"));
        }
        for (i, row) in label_cond.row_iter().enumerate() {
            if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) || (row.sum() - 1.0).abs() > SUM_TOL {
                return Err(invalid_input(format!("label_cond row {i} is not a distribution")));
            }
        }
        if priors.len() != k
            || priors.iter().any(|&v| !(v >= 0.0) || !v.is_finite())
            || (priors.sum() - 1.0).abs() > SUM_TOL
        {
            return Err(invalid_input("priors must be a distribution over components"));
        }
        Ok(Self { means, precisions, shared_precision, label_cond, priors })
    }

    /// One crisp label per component (`P(y | k) = 1` iff `y = labels[k]`) and
    /// uniform priors. `shared_precision` is inferred from exact equality.
    pub fn crisp(
        means: Vec<DVector<f64>>,
        precisions: Vec<DMatrix<f64>>,
        labels: &[usize],
        num_labels: usize,
    ) -> Result<Self> {
        let k = means.len();
        if labels.len() != k {
            return Err(invalid_input("one label per component required"));
        }
        let mut label_cond = DMatrix::zeros(k, num_labels);
        for (i, &y) in labels.iter().enumerate() {
            if y == 0 || y > num_labels {
                return Err(invalid_input(format!("component label {y} outside 1..={num_labels}")));
            }
            label_cond[(i, y - 1)] = 1.0;
        }
        let shared = precisions.iter().all(|p| p == &precisions[0]);
        let priors = DVector::from_element(k, 1.0 / k as f64);
        Self::new(means, precisions, shared, label_cond, priors)
    }

    pub fn num_components(&self) -> usize {
        self.means.len()
    }

    pub fn num_labels(&self) -> usize {
        self.label_cond.ncols()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn precisions(&self) -> &[DMatrix<f64>] {
        &self.precisions
    }

    pub fn shared_precision(&self) -> bool {
        self.shared_precision
    }

    pub fn label_cond(&self) -> &DMatrix<f64> {
        &self.label_cond
    }

    pub fn priors(&self) -> &DVector<f64> {
        &self.priors
    }

    /// `W = (μ_1, …, μ_K) ∈ R^{m×K}`.
    pub fn mean_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.means)
    }

    /// The label a component emits with probability one, if any.
    pub fn crisp_label(&self, k: usize) -> Option<usize> {
        let row = self.label_cond.row(k);
        row.iter().position(|&v| v == 1.0).map(|i| i + 1)
    }

    pub fn evaluator(&self, policy: PrecisionPolicy) -> Result<GmmEvaluator<'_>> {
        GmmEvaluator::new(self, policy)
    }

    pub fn log_component_density(&self, k: usize, x: &DVector<f64>, policy: PrecisionPolicy) -> Result<f64> {
        if k >= self.num_components() {
            return Err(invalid_input(format!("component {k} out of range")));
        }
        let c = policy.condition(&self.precisions[k])?;
        check_point(x, self.dim())?;
        Ok(log_normalizer(c.log_det, self.dim()) - 0.5 * quad_form(&c.precision, &(x - &self.means[k])))
    }

    pub fn joint_density(&self, x: &DVector<f64>, y: usize, policy: PrecisionPolicy) -> Result<f64> {
        Ok(self.evaluator(policy)?.log_joint(x, y)?.exp())
    }

    pub fn posterior_labels(&self, x: &DVector<f64>, policy: PrecisionPolicy) -> Result<DVector<f64>> {
        self.evaluator(policy)?.posterior_labels(x)
    }

    pub fn classify(&self, x: &DVector<f64>, policy: PrecisionPolicy) -> Result<usize> {
        self.evaluator(policy)?.classify(x)
    }

    pub fn log_likelihood(&self, data: &Dataset, policy: PrecisionPolicy) -> Result<LogLikelihood> {
        self.evaluator(policy)?.log_likelihood(data)
    }
}

fn log_normalizer(log_det: f64, m: usize) -> f64 {
    0.5 * log_det - 0.5 * m as f64 * (2.0 * PI).ln()
}

fn check_point(x: &DVector<f64>, m: usize) -> Result<()> {
    if x.len() != m {
        return Err(invalid_input(format!("point has dimension {} but model has {m}", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid_input("point has non-finite entries"));
    }
    Ok(())
}

/// Total log-likelihood of a labeled dataset; `Impossible` when some point's
/// label has zero probability under every component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LogLikelihood {
    Finite(f64),
    Impossible { index: usize },
}

impl LogLikelihood {
    /// The value, with `-∞` for an impossible dataset.
    pub fn value(self) -> f64 {
        match self {
            LogLikelihood::Finite(v) => v,
            LogLikelihood::Impossible { .. } => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, LogLikelihood::Finite(_))
    }
}

/// A model with its precisions conditioned once, for repeated evaluation.
#[derive(Clone, Debug)]
pub struct GmmEvaluator<'a> {
    model: &'a LabeledGmm,
    precisions: Vec<DMatrix<f64>>,
    log_norm: Vec<f64>,
    log_priors: Vec<f64>,
    log_label_cond: DMatrix<f64>,
}

impl<'a> GmmEvaluator<'a> {
    pub fn new(model: &'a LabeledGmm, policy: PrecisionPolicy) -> Result<Self> {
        let m = model.dim();
        let mut precisions: Vec<DMatrix<f64>> = Vec::with_capacity(model.num_components());
        let mut log_norm = Vec::with_capacity(model.num_components());
        for (k, lambda) in model.precisions.iter().enumerate() {
            // shared precisions are conditioned once
            if model.shared_precision && k > 0 {
                precisions.push(precisions[0].clone());
                log_norm.push(log_norm[0]);
                continue;
            }
            let c = policy.condition(lambda)?;
            log_norm.push(log_normalizer(c.log_det, m));
            precisions.push(c.precision);
        }
        Ok(Self {
            model,
            precisions,
            log_norm,
            log_priors: model.priors.iter().map(|p| p.ln()).collect(),
            log_label_cond: model.label_cond.map(f64::ln),
        })
    }

    pub fn model(&self) -> &'a LabeledGmm {
        self.model
    }

    /// Conditioned precision of component `k`.
    pub fn precision(&self, k: usize) -> &DMatrix<f64> {
        &self.precisions[k]
    }

    pub fn precisions(&self) -> &[DMatrix<f64>] {
        &self.precisions
    }

    /// `log N(x | μ_k, Λ_k)` without input validation.
    pub(crate) fn log_density_unchecked(&self, k: usize, x: &DVector<f64>) -> f64 {
        let diff = x - &self.model.means[k];
        self.log_norm[k] - 0.5 * quad_form(&self.precisions[k], &diff)
    }

    pub fn log_component_density(&self, k: usize, x: &DVector<f64>) -> Result<f64> {
        if k >= self.model.num_components() {
            return Err(invalid_input(format!("component {k} out of range")));
        }
        check_point(x, self.model.dim())?;
        Ok(self.log_density_unchecked(k, x))
    }

    pub(crate) fn log_label_cond(&self, k: usize, y: usize) -> f64 {
        self.log_label_cond[(k, y - 1)]
    }

    pub(crate) fn log_prior(&self, k: usize) -> f64 {
        self.log_priors[k]
    }

    fn check_label(&self, y: usize) -> Result<()> {
        if y == 0 || y > self.model.num_labels() {
            return Err(invalid_input(format!("label {y} outside 1..={}", self.model.num_labels())));
        }
        Ok(())
    }

    fn log_densities(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        check_point(x, self.model.dim())?;
        let logs: Vec<f64> = (0..self.model.num_components()).map(|k| self.log_density_unchecked(k, x)).collect();
        if logs.iter().any(|v| v.is_nan()) || logs.iter().all(|&v| v == f64::NEG_INFINITY) {
            return Err(Error::DegenerateEvaluation("every component density vanishes at the point".into()));
        }
        Ok(logs)
    }

    /// `log p(x, y)` via log-sum-exp over components.
    pub fn log_joint(&self, x: &DVector<f64>, y: usize) -> Result<f64> {
        self.check_label(y)?;
        let logs = self.log_densities(x)?;
        Ok(log_sum_exp(logs.iter().enumerate().map(|(k, l)| l + self.log_label_cond(k, y) + self.log_priors[k])))
    }

    /// `log p(x)` of the unlabeled mixture.
    pub fn log_marginal(&self, x: &DVector<f64>) -> Result<f64> {
        let logs = self.log_densities(x)?;
        Ok(log_sum_exp(logs.iter().zip(&self.log_priors).map(|(l, p)| l + p)))
    }

    pub fn posterior_labels(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let logs = self.log_densities(x)?;
        let l = self.model.num_labels();
        let joint: Vec<f64> = (1..=l)
            .map(|y| {
                log_sum_exp(logs.iter().enumerate().map(|(k, lg)| lg + self.log_label_cond(k, y) + self.log_priors[k]))
            })
            .collect();
        let total = log_sum_exp(joint.iter().copied());
        if !total.is_finite() {
            return Err(Error::DegenerateEvaluation("marginal density is zero".into()));
        }
        Ok(DVector::from_iterator(l, joint.iter().map(|j| (j - total).exp())))
    }

    /// MAP label; ties go to the smallest label.
    pub fn classify(&self, x: &DVector<f64>) -> Result<usize> {
        let post = self.posterior_labels(x)?;
        Ok(argmax_first(post.iter().copied()) + 1)
    }

    /// Classification error rate on a dataset.
    pub fn error_rate(&self, data: &Dataset) -> Result<f64> {
        let mut wrong = 0usize;
        for j in 0..data.len() {
            if self.classify(&data.point(j))? != data.label(j) {
                wrong += 1;
            }
        }
        Ok(wrong as f64 / data.len() as f64)
    }

    pub fn log_likelihood(&self, data: &Dataset) -> Result<LogLikelihood> {
        let mut total = 0.0;
        for j in 0..data.len() {
            let lj = self.log_joint(&data.point(j), data.label(j))?;
            if lj == f64::NEG_INFINITY {
                return Ok(LogLikelihood::Impossible { index: j });
            }
            total += lj;
        }
        Ok(LogLikelihood::Finite(total))
    }
}

pub(crate) fn argmax_first(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Settings for [`fit_lgmm`].
#[derive(Clone, Debug)]
pub struct LgmmFitConfig {
    pub components_per_label: usize,
    pub shared_precision: bool,
    /// Lower bound on the standard deviation along every direction.
    pub min_std: f64,
    pub policy: PrecisionPolicy,
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Absolute log-likelihood change that ends a run.
    pub tolerance: f64,
    pub exec: Execution,
}

impl Default for LgmmFitConfig {
    fn default() -> Self {
        Self {
            components_per_label: 1,
            shared_precision: false,
            min_std: 1e-3,
            policy: PrecisionPolicy::default(),
            seed: 0,
            restarts: 5,
            max_iterations: 500,
            tolerance: 1e-6,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LgmmFit {
    pub model: LabeledGmm,
    /// Training log-likelihood before every M-step.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub restart: usize,
}

impl LgmmFit {
    pub fn log_likelihood(&self) -> f64 {
        self.loglik_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// Fits a labeled mixture by EM where every component owns one label.
///
/// Runs `restarts` seeded initializations (in parallel when enabled) and keeps
/// the one with the highest final training log-likelihood.
pub fn fit_lgmm(data: &Dataset, config: &LgmmFitConfig) -> Result<LgmmFit> {
    if config.components_per_label == 0 {
        return Err(invalid_config("components_per_label must be at least 1"));
    }
    if config.restarts == 0 || config.max_iterations == 0 {
        return Err(invalid_config("restarts and max_iterations must be at least 1"));
    }
    if !(config.min_std > 0.0) || !(config.tolerance > 0.0) {
        return Err(invalid_config("min_std and tolerance must be positive"));
    }
    config.policy.validate()?;
    for y in data.label_set() {
        let n = data.count_label(y);
        if n < config.components_per_label {
            return Err(invalid_config(format!(
                "label {y} has {n} points but {} components were requested",
                config.components_per_label
            )));
        }
    }
    let runs = par::try_map_indexed(config.exec, config.restarts, |r| fit_once(data, config, r))?;
    let mut best = 0;
    for (r, fit) in runs.iter().enumerate() {
        if fit.log_likelihood() > runs[best].log_likelihood() {
            best = r;
        }
    }
    Ok(runs.into_iter().nth(best).expect("at least one restart"))
}

struct Component {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

fn floor_covariance(cov: &DMatrix<f64>, min_var: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = sym_eigen(cov);
    let vals = eig.eigenvalues.map(|v| v.max(min_var));
    let floored = compose(&eig.eigenvectors, &vals);
    let precision = compose(&eig.eigenvectors, &vals.map(|v| 1.0 / v));
    (floored, precision)
}

fn fit_once(data: &Dataset, config: &LgmmFitConfig, restart: usize) -> Result<LgmmFit> {
    let mut rng = rng::stream(config.seed, rng::stream_id(1, restart as u32, 0));
    let m = data.dim();
    let num_labels = data.max_label();
    let min_var = config.min_std * config.min_std;
    let per = config.components_per_label;

    let mut comp_labels = Vec::new();
    let mut comps = Vec::new();
    for y in data.label_set() {
        let mut idx = data.indices_of(y);
        let class_cov = scatter(data, &idx, &mean_of(data, &idx)) / idx.len() as f64;
        idx.shuffle(&mut rng);
        for &j in idx.iter().take(per) {
            comp_labels.push(y);
            comps.push(Component { mean: data.point(j), cov: class_cov.clone() });
        }
    }
    let k_total = comps.len();
    let mut priors = DVector::from_element(k_total, 1.0 / k_total as f64);
    let owners: Vec<Vec<usize>> =
        (0..=num_labels).map(|y| (0..k_total).filter(|&k| comp_labels[k] == y).collect()).collect();

    let mut trace = Vec::new();
    let mut converged = false;
    let n = data.len();
    let points: Vec<DVector<f64>> = (0..n).map(|j| data.point(j)).collect();
    let mut model;
    loop {
        let mut precisions = Vec::with_capacity(k_total);
        for c in comps.iter_mut() {
            let (floored, precision) = floor_covariance(&c.cov, min_var);
            c.cov = floored;
            precisions.push(precision);
        }
        if config.shared_precision {
            let p0 = precisions[0].clone();
            precisions.iter_mut().for_each(|p| *p = p0.clone());
        }
        let mut label_cond = DMatrix::zeros(k_total, num_labels);
        for (k, &y) in comp_labels.iter().enumerate() {
            label_cond[(k, y - 1)] = 1.0;
        }
        model = LabeledGmm::new(
            comps.iter().map(|c| c.mean.clone()).collect(),
            precisions,
            config.shared_precision,
            label_cond,
            priors.clone(),
        )?;
        let eval = model.evaluator(config.policy)?;

        // E-step restricted to the components owning each point's label
        let mut resp = DMatrix::<f64>::zeros(k_total, n);
        let mut ll = 0.0;
        for j in 0..n {
            let own = &owners[data.label(j)];
            let logs: Vec<f64> =
                own.iter().map(|&k| eval.log_density_unchecked(k, &points[j]) + eval.log_prior(k)).collect();
            let lse = log_sum_exp(logs.iter().copied());
            if !lse.is_finite() {
                return Err(Error::NumericalFailure(format!("point {j} has zero likelihood during EM")));
            }
            ll += lse;
            for (&k, l) in own.iter().zip(&logs) {
                resp[(k, j)] = (l - lse).exp();
            }
        }
        let done = trace.last().is_some_and(|&prev: &f64| (ll - prev).abs() < config.tolerance);
        trace.push(ll);
        if done {
            converged = true;
            break;
        }
        if trace.len() >= config.max_iterations {
            break;
        }

        // M-step
        let mut pooled = DMatrix::zeros(m, m);
        for (k, c) in comps.iter_mut().enumerate() {
            let nk: f64 = resp.row(k).sum();
            priors[k] = nk / n as f64;
            if nk <= 1e-12 {
                continue;
            }
            let mut mean = DVector::zeros(m);
            for j in 0..n {
                mean.axpy(resp[(k, j)], &points[j], 1.0);
            }
            mean /= nk;
            let mut s = DMatrix::zeros(m, m);
            for j in 0..n {
                let d = &points[j] - &mean;
                s.ger(resp[(k, j)], &d, &d, 1.0);
            }
            pooled += &s;
            c.mean = mean;
            c.cov = s / nk;
        }
        let psum = priors.sum();
        priors /= psum;
        if config.shared_precision {
            let shared = pooled / n as f64;
            comps.iter_mut().for_each(|c| c.cov = shared.clone());
        }
    }
    Ok(LgmmFit { model, iterations: trace.len(), loglik_trace: trace, converged, restart })
}

fn mean_of(data: &Dataset, idx: &[usize]) -> DVector<f64> {
    let mut mean = DVector::zeros(data.dim());
    for &j in idx {
        mean += data.point(j);
    }
    mean / idx.len() as f64
}

fn scatter(data: &Dataset, idx: &[usize], mean: &DVector<f64>) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(data.dim(), data.dim());
    for &j in idx {
        let d = data.point(j) - mean;
        s.ger(1.0, &d, &d, 1.0);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig2_model() -> LabeledGmm {
        let lambda = DMatrix::identity(2, 2) / 0.09;
        LabeledGmm::crisp(
            vec![
                DVector::from_vec(vec![-1.0, 0.0]),
                DVector::from_vec(vec![0.0, 0.0]),
                DVector::from_vec(vec![1.0, 0.0]),
            ],
            vec![lambda.clone(), lambda.clone(), lambda],
            &[1, 2, 3],
            3,
        )
        .unwrap()
    }

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn unit_gaussian_at_mean() {
        let m = LabeledGmm::crisp(vec![v(&[0.0])], vec![DMatrix::identity(1, 1)], &[1], 1).unwrap();
        let l = m.log_component_density(0, &v(&[0.0]), PrecisionPolicy::default()).unwrap();
        assert_relative_eq!(l, -0.918_938_533_204_672_7, epsilon = 1e-12);
    }

    #[test]
    fn fig2_density_at_mean() {
        let l = fig2_model().log_component_density(0, &v(&[-1.0, 0.0]), PrecisionPolicy::default()).unwrap();
        assert_relative_eq!(l, (1.0 / (2.0 * PI * 0.09)).ln(), epsilon = 1e-12);
        assert!((l - 0.570).abs() < 1e-3);
    }

    #[test]
    fn pseudo_determinant_skips_zero_eigenvalue() {
        let lambda = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.0]);
        let m = LabeledGmm::crisp(vec![v(&[0.0, 0.0])], vec![lambda], &[1], 1).unwrap();
        let l = m.log_component_density(0, &v(&[0.0, 0.0]), PrecisionPolicy::PseudoDeterminant).unwrap();
        assert_relative_eq!(l, 0.5 * (4.0 / (2.0 * PI).powi(2)).ln(), epsilon = 1e-12);
    }

    #[test]
    fn pseudo_determinant_of_zero_matrix_is_degenerate() {
        let m = LabeledGmm::crisp(vec![v(&[0.0])], vec![DMatrix::zeros(1, 1)], &[1], 1).unwrap();
        let err = m.log_component_density(0, &v(&[0.0]), PrecisionPolicy::PseudoDeterminant);
        assert!(matches!(err, Err(Error::DegenerateModel(_))));
    }

    #[test]
    fn non_finite_point_is_invalid() {
        let err = fig2_model().log_component_density(0, &v(&[f64::NAN, 0.0]), PrecisionPolicy::default());
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn eigen_floor_lifts_small_eigenvalues() {
        let policy = PrecisionPolicy::from_max_std(0.5).unwrap();
        let lambda = DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]);
        let c = policy.condition(&lambda).unwrap();
        assert!(c.eigenvalues.iter().all(|&e| e >= 4.0));
    }

    #[test]
    fn single_crisp_component_joint() {
        let m = LabeledGmm::crisp(vec![v(&[0.0, 0.0])], vec![DMatrix::identity(2, 2)], &[1], 2).unwrap();
        let x = v(&[0.3, -0.2]);
        let p = PrecisionPolicy::default();
        assert_relative_eq!(
            m.joint_density(&x, 1, p).unwrap(),
            m.log_component_density(0, &x, p).unwrap().exp(),
            max_relative = 1e-12
        );
        assert_eq!(m.joint_density(&x, 2, p).unwrap(), 0.0);
    }

    #[test]
    fn fig2_joint_at_origin_is_dominated_by_middle() {
        let m = fig2_model();
        let p = PrecisionPolicy::default();
        let x = v(&[0.0, 0.0]);
        let joint = m.joint_density(&x, 2, p).unwrap();
        let dominant = m.log_component_density(1, &x, p).unwrap().exp() / 3.0;
        assert_relative_eq!(joint, dominant, max_relative = 1e-12);
        // neighbours are one unit away: relative weight exp(-1 / (2 * 0.09))
        let cross = m.log_component_density(0, &x, p).unwrap().exp() / 3.0;
        assert_relative_eq!(cross / dominant, (-1.0f64 / 0.18).exp(), max_relative = 1e-12);
        assert!(cross < 4e-3 * dominant);
    }

    #[test]
    fn fig2_classification() {
        let m = fig2_model();
        let p = PrecisionPolicy::default();
        assert_eq!(m.classify(&v(&[-1.0, 0.0]), p).unwrap(), 1);
        assert_eq!(m.classify(&v(&[0.0, 0.0]), p).unwrap(), 2);
        assert_eq!(m.classify(&v(&[1.0, 0.0]), p).unwrap(), 3);
    }

    #[test]
    fn symmetric_posterior_and_tie_rule() {
        let id = DMatrix::identity(1, 1);
        let m = LabeledGmm::crisp(vec![v(&[-1.0]), v(&[1.0])], vec![id.clone(), id], &[1, 3], 3).unwrap();
        let p = PrecisionPolicy::default();
        let post = m.posterior_labels(&v(&[0.0]), p).unwrap();
        assert_relative_eq!(post[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(post[2], 0.5, epsilon = 1e-12);
        assert_eq!(m.classify(&v(&[0.0]), p).unwrap(), 1);
    }

    #[test]
    fn single_component_posterior_is_one_hot() {
        let m = LabeledGmm::crisp(vec![v(&[0.0])], vec![DMatrix::identity(1, 1)], &[2], 3).unwrap();
        let post = m.posterior_labels(&v(&[40.0]), PrecisionPolicy::default()).unwrap();
        assert_eq!(post.as_slice(), &[0.0, 1.0, 0.0]);
        assert_eq!(m.classify(&v(&[-7.0]), PrecisionPolicy::default()).unwrap(), 2);
    }

    #[test]
    fn impossible_label_gives_sentinel() {
        let m = LabeledGmm::crisp(vec![v(&[0.0])], vec![DMatrix::identity(1, 1)], &[1], 2).unwrap();
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0]], vec![1, 2]).unwrap();
        let ll = m.log_likelihood(&data, PrecisionPolicy::default()).unwrap();
        assert_eq!(ll, LogLikelihood::Impossible { index: 1 });
        assert_eq!(ll.value(), f64::NEG_INFINITY);
    }

    #[test]
    fn single_point_likelihood() {
        let m = LabeledGmm::crisp(vec![v(&[0.5, 1.0])], vec![DMatrix::identity(2, 2) * 3.0], &[1], 1).unwrap();
        let data = Dataset::from_rows(&[vec![0.5, 1.0]], vec![1]).unwrap();
        let p = PrecisionPolicy::default();
        assert_relative_eq!(
            m.log_likelihood(&data, p).unwrap().value(),
            m.log_component_density(0, &v(&[0.5, 1.0]), p).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn constructor_rejects_bad_distributions() {
        let id = DMatrix::identity(1, 1);
        let bad_cond = DMatrix::from_row_slice(1, 2, &[0.5, 0.6]);
        assert!(LabeledGmm::new(vec![v(&[0.0])], vec![id.clone()], true, bad_cond, v(&[1.0])).is_err());
        let cond = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(LabeledGmm::new(vec![v(&[0.0])], vec![id.clone()], true, cond.clone(), v(&[0.9])).is_err());
        let neg = DMatrix::from_row_slice(1, 1, &[-1.0]);
        assert!(LabeledGmm::new(vec![v(&[0.0])], vec![neg], true, cond, v(&[1.0])).is_err());
    }

    #[test]
    fn fit_single_component_recovers_class_means() {
        let data = Dataset::from_rows(
            &[vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 3.0], vec![5.0, 5.0], vec![7.0, 5.0]],
            vec![1, 1, 1, 2, 2],
        )
        .unwrap();
        let fit = fit_lgmm(&data, &LgmmFitConfig { restarts: 2, ..Default::default() }).unwrap();
        assert_relative_eq!(fit.model.means()[0], v(&[1.0, 1.0]), epsilon = 1e-12);
        assert_relative_eq!(fit.model.means()[1], v(&[6.0, 5.0]), epsilon = 1e-12);
        assert!(fit.converged);
    }

    #[test]
    fn fit_rejects_too_few_points() {
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], vec![1, 1, 2]).unwrap();
        let cfg = LgmmFitConfig { components_per_label: 2, ..Default::default() };
        assert!(matches!(fit_lgmm(&data, &cfg), Err(Error::InvalidConfiguration(_))));
    }
}
