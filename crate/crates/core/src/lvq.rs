//! Generalized (matrix) learning vector quantization.
//!
//! Prototypes `μ_k` carry labels `ȳ_k`; distances are
//! `d_k(x) = (μ_k − x)ᵀ Ω_kᵀ Ω_k (μ_k − x)` with either one shared `Ω`
//! (GMLVQ) or one `Ω_k` per prototype (LGMLVQ). Training runs stochastic
//! gradient descent on the GLVQ cost `Σ Φ((d⁺ − d⁻)/(d⁺ + d⁻))`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{invalid_config, invalid_input, Result};
use crate::lgmm::LabeledGmm;
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub enum Metric {
    Shared(DMatrix<f64>),
    Local(Vec<DMatrix<f64>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// GLVQ: `Ω = I`, never adapted.
    Identity,
    /// GMLVQ: one adaptive `Ω`.
    Shared,
    /// LGMLVQ: one adaptive `Ω_k` per prototype.
    Local,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LvqModel {
    prototypes: Vec<DVector<f64>>,
    labels: Vec<usize>,
    metric: Metric,
}

impl LvqModel {
    pub fn new(prototypes: Vec<DVector<f64>>, labels: Vec<usize>, metric: Metric) -> Result<Self> {
        let k = prototypes.len();
        if k == 0 {
            return Err(invalid_input("LVQ model needs at least one prototype"));
        }
        let m = prototypes[0].len();
        if m == 0 || prototypes.iter().any(|p| p.len() != m || p.iter().any(|v| !v.is_finite())) {
            return Err(invalid_input("prototypes must be finite and share one positive dimension"));
        }
        if labels.len() != k || labels.contains(&0) {
            return Err(invalid_input("one 1-based label per prototype required"));
        }
        let omegas: Vec<&DMatrix<f64>> = match &metric {
            Metric::Shared(o) => vec![o],
            Metric::Local(os) => {
                if os.len() != k {
                    return Err(invalid_input("local metric needs one matrix per prototype"));
                }
                os.iter().collect()
            }
        };
        if omegas.iter().any(|o| o.ncols() != m || o.nrows() == 0 || o.iter().any(|v| !v.is_finite())) {
            return Err(invalid_input(format!("metric matrices must be finite with {m} columns")));
        }
        Ok(Self { prototypes, labels, metric })
    }

    pub fn prototypes(&self) -> &[DVector<f64>] {
        &self.prototypes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn num_prototypes(&self) -> usize {
        self.prototypes.len()
    }

    pub fn dim(&self) -> usize {
        self.prototypes[0].len()
    }

    pub fn num_labels(&self) -> usize {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    pub fn omega(&self, k: usize) -> &DMatrix<f64> {
        match &self.metric {
            Metric::Shared(o) => o,
            Metric::Local(os) => &os[k],
        }
    }

    /// Squared metric distance `‖Ω_k (μ_k − x)‖²`.
    pub fn distance(&self, k: usize, x: &DVector<f64>) -> f64 {
        (self.omega(k) * (&self.prototypes[k] - x)).norm_squared()
    }

    /// Label of the closest prototype; ties go to the lower prototype index.
    pub fn classify(&self, x: &DVector<f64>) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for k in 0..self.num_prototypes() {
            let d = self.distance(k, x);
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        self.labels[best]
    }

    pub fn error_rate(&self, data: &Dataset) -> f64 {
        let wrong = (0..data.len()).filter(|&j| self.classify(&data.point(j)) != data.label(j)).count();
        wrong as f64 / data.len() as f64
    }

    /// Closest same-label and different-label prototypes for `(x, y)`.
    pub fn winners(&self, x: &DVector<f64>, y: usize) -> Option<Winners> {
        LvqModelRef { prototypes: &self.prototypes, labels: &self.labels, metric: &self.metric }.winners(x, y)
    }

    fn check_labels_covered(&self, data: &Dataset) -> Result<()> {
        for y in data.label_set() {
            if !self.labels.contains(&y) {
                return Err(invalid_input(format!("label {y} has no prototype")));
            }
        }
        if self.labels.iter().all(|&l| l == self.labels[0]) {
            return Err(invalid_config("GLVQ cost needs prototypes of at least two labels"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Winners {
    pub k_plus: usize,
    pub d_plus: f64,
    pub k_minus: usize,
    pub d_minus: f64,
}

impl Winners {
    /// Relative distance difference `(d⁺ − d⁻)/(d⁺ + d⁻)` in `[−1, 1]`.
    pub fn mu(&self) -> f64 {
        let s = self.d_plus + self.d_minus;
        if s > 0.0 {
            (self.d_plus - self.d_minus) / s
        } else {
            0.0
        }
    }

    /// `(∂μ/∂d⁺, ∂μ/∂d⁻)`.
    pub fn mu_derivatives(&self) -> (f64, f64) {
        let s = self.d_plus + self.d_minus;
        if s > 0.0 {
            (2.0 * self.d_minus / (s * s), -2.0 * self.d_plus / (s * s))
        } else {
            (0.0, 0.0)
        }
    }
}

/// Logistic `Φ(z) = 1 / (1 + e^{−βz})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sigmoid {
    pub slope: f64,
}

impl Default for Sigmoid {
    fn default() -> Self {
        Self { slope: 1.0 }
    }
}

impl Sigmoid {
    pub fn value(&self, z: f64) -> f64 {
        1.0 / (1.0 + (-self.slope * z).exp())
    }

    pub fn derivative(&self, z: f64) -> f64 {
        let s = self.value(z);
        self.slope * s * (1.0 - s)
    }
}

/// GLVQ cost of a model on labeled data.
pub fn glvq_cost(model: &LvqModel, data: &Dataset, phi: Sigmoid) -> Result<f64> {
    model.check_labels_covered(data)?;
    let mut total = 0.0;
    for j in 0..data.len() {
        let w = model.winners(&data.point(j), data.label(j)).expect("labels checked");
        total += phi.value(w.mu());
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LvqTrainingConfig {
    pub prototypes_per_class: usize,
    pub epochs: usize,
    pub learning_rate_prototypes: f64,
    pub learning_rate_omega: f64,
    pub sigmoid: Sigmoid,
    pub seed: u64,
}

impl Default for LvqTrainingConfig {
    fn default() -> Self {
        Self {
            prototypes_per_class: 1,
            epochs: 100,
            learning_rate_prototypes: 0.01,
            learning_rate_omega: 0.001,
            sigmoid: Sigmoid::default(),
            seed: 0,
        }
    }
}

impl LvqTrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.prototypes_per_class == 0 || self.epochs == 0 {
            return Err(invalid_config("prototypes_per_class and epochs must be at least 1"));
        }
        if !(self.learning_rate_prototypes > 0.0) || !(self.learning_rate_omega > 0.0) || !(self.sigmoid.slope > 0.0) {
            return Err(invalid_config("learning rates and sigmoid slope must be positive"));
        }
        Ok(())
    }
}

pub fn train_glvq(data: &Dataset, config: &LvqTrainingConfig) -> Result<LvqModel> {
    train(data, config, MetricKind::Identity)
}

pub fn train_gmlvq(data: &Dataset, config: &LvqTrainingConfig) -> Result<LvqModel> {
    train(data, config, MetricKind::Shared)
}

pub fn train_lgmlvq(data: &Dataset, config: &LvqTrainingConfig) -> Result<LvqModel> {
    train(data, config, MetricKind::Local)
}

/// Scales `Ω` so that `trace(ΩᵀΩ) = m`.
fn normalize_omega(omega: &mut DMatrix<f64>) {
    let m = omega.ncols() as f64;
    let tr = omega.norm_squared();
    if tr > 0.0 && tr.is_finite() {
        *omega *= (m / tr).sqrt();
    }
}

pub fn train(data: &Dataset, config: &LvqTrainingConfig, kind: MetricKind) -> Result<LvqModel> {
    config.validate()?;
    let classes: Vec<usize> = data.label_set().into_iter().collect();
    if classes.len() < 2 {
        return Err(invalid_config("LVQ training needs data from at least two classes"));
    }
    let m = data.dim();
    let n = data.len();
    let mut rng = rng::stream(config.seed, rng::stream_id(2, 0, 0));

    let overall_mean = data.points().row_mean().transpose();
    let std = data
        .points()
        .row_iter()
        .fold(DVector::zeros(m), |acc, r| acc + (r.transpose() - &overall_mean).map(|v| v * v))
        .map(|s| (s / n as f64).sqrt());

    let mut prototypes = Vec::new();
    let mut labels = Vec::new();
    for &y in &classes {
        let idx = data.indices_of(y);
        let mean = idx.iter().fold(DVector::zeros(m), |acc, &j| acc + data.point(j)) / idx.len() as f64;
        for _ in 0..config.prototypes_per_class {
            let jitter = DVector::from_fn(m, |i, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                0.01 * std[i] * z
            });
            prototypes.push(&mean + jitter);
            labels.push(y);
        }
    }
    let k = prototypes.len();
    let mut metric = match kind {
        MetricKind::Identity | MetricKind::Shared => Metric::Shared(DMatrix::identity(m, m)),
        MetricKind::Local => Metric::Local(vec![DMatrix::identity(m, m); k]),
    };

    let points: Vec<DVector<f64>> = (0..n).map(|j| data.point(j)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let phi = config.sigmoid;
    let (lr_w, lr_o) = (config.learning_rate_prototypes, config.learning_rate_omega);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &j in &order {
            let x = &points[j];
            let model = LvqModelRef { prototypes: &prototypes, labels: &labels, metric: &metric };
            let Some(w) = model.winners(x, data.label(j)) else { continue };
            let (dmu_plus, dmu_minus) = w.mu_derivatives();
            let f = phi.derivative(w.mu());
            let c_plus = f * dmu_plus;
            let c_minus = f * dmu_minus;

            let diff_plus = &prototypes[w.k_plus] - x;
            let diff_minus = &prototypes[w.k_minus] - x;
            let om_plus = model.omega(w.k_plus).clone();
            let om_minus = model.omega(w.k_minus).clone();
            let proj_plus = &om_plus * &diff_plus;
            let proj_minus = &om_minus * &diff_minus;

            // ∂d/∂μ = 2 ΩᵀΩ (μ − x),  ∂d/∂Ω = 2 Ω (μ − x)(μ − x)ᵀ
            let grad_w_plus = om_plus.tr_mul(&proj_plus) * (2.0 * c_plus);
            let grad_w_minus = om_minus.tr_mul(&proj_minus) * (2.0 * c_minus);
            let grad_o_plus = &proj_plus * diff_plus.transpose() * (2.0 * c_plus);
            let grad_o_minus = &proj_minus * diff_minus.transpose() * (2.0 * c_minus);

            prototypes[w.k_plus].axpy(-lr_w, &grad_w_plus, 1.0);
            prototypes[w.k_minus].axpy(-lr_w, &grad_w_minus, 1.0);
            match &mut metric {
                Metric::Shared(o) if kind == MetricKind::Shared => {
                    *o -= (grad_o_plus + grad_o_minus) * lr_o;
                    normalize_omega(o);
                }
                Metric::Local(os) => {
                    os[w.k_plus] -= grad_o_plus * lr_o;
                    normalize_omega(&mut os[w.k_plus]);
                    os[w.k_minus] -= grad_o_minus * lr_o;
                    normalize_omega(&mut os[w.k_minus]);
                }
                _ => {}
            }
        }
    }
    LvqModel::new(prototypes, labels, metric)
}

struct LvqModelRef<'a> {
    prototypes: &'a [DVector<f64>],
    labels: &'a [usize],
    metric: &'a Metric,
}

impl LvqModelRef<'_> {
    fn omega(&self, k: usize) -> &DMatrix<f64> {
        match self.metric {
            Metric::Shared(o) => o,
            Metric::Local(os) => &os[k],
        }
    }

    fn winners(&self, x: &DVector<f64>, y: usize) -> Option<Winners> {
        let mut plus: Option<(usize, f64)> = None;
        let mut minus: Option<(usize, f64)> = None;
        for k in 0..self.prototypes.len() {
            let d = (self.omega(k) * (&self.prototypes[k] - x)).norm_squared();
            let slot = if self.labels[k] == y { &mut plus } else { &mut minus };
            if slot.is_none_or(|(_, best)| d < best) {
                *slot = Some((k, d));
            }
        }
        let ((k_plus, d_plus), (k_minus, d_minus)) = (plus?, minus?);
        Some(Winners { k_plus, d_plus, k_minus, d_minus })
    }
}

/// `0.05 ×` the median Euclidean distance between prototype pairs.
pub fn default_sigma(model: &LvqModel) -> Result<f64> {
    let k = model.num_prototypes();
    if k < 2 {
        return Ok(1.0);
    }
    let mut dists = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        for b in a + 1..k {
            dists.push((&model.prototypes[a] - &model.prototypes[b]).norm());
        }
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 { dists[mid] } else { 0.5 * (dists[mid - 1] + dists[mid]) };
    if !(median > 0.0) {
        return Err(invalid_input("prototypes coincide; cannot derive a bandwidth"));
    }
    Ok(0.05 * median)
}

/// Labeled mixture with means at the prototypes, `Λ_k = Ω_kᵀ Ω_k / σ²`,
/// crisp labels and uniform priors.
pub fn to_lgmm(model: &LvqModel, sigma: f64) -> Result<LabeledGmm> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid_input("sigma must be positive and finite"));
    }
    let scale = 1.0 / (sigma * sigma);
    let precision = |o: &DMatrix<f64>| {
        let p = o.tr_mul(o) * scale;
        (&p + p.transpose()) * 0.5
    };
    let precisions = match &model.metric {
        Metric::Shared(o) => vec![precision(o); model.num_prototypes()],
        Metric::Local(os) => os.iter().map(precision).collect(),
    };
    LabeledGmm::crisp(model.prototypes.clone(), precisions, &model.labels, model.num_labels())
}
