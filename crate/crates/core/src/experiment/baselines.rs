//! Reference methods the EM transfer is compared against.

use nalgebra::{DMatrix, DVector};

use crate::dataset::Dataset;
use crate::error::{invalid_input, Error, Result};
use crate::linalg::{flatten_row_major, padded_identity, unflatten_row_major};
use crate::lvq::{self, LvqModel, LvqTrainingConfig, MetricKind, Sigmoid};
use crate::optim::{self, SolverConfig, SolverStatus};

/// Test error of the source model applied to target points as they are
/// (zero-padded or truncated when the dimensions differ).
pub fn baseline_naive(model: &LvqModel, target_test: &Dataset) -> Result<f64> {
    let h = padded_identity(model.dim(), target_test.dim());
    Ok(model.error_rate(&target_test.mapped(&h)?))
}

/// A classifier fitted on target data only.
#[derive(Clone, Debug)]
pub enum Retrained {
    Model(LvqModel),
    /// Only one class was available; every point gets that label.
    Constant(usize),
}

impl Retrained {
    pub fn classify(&self, x: &DVector<f64>) -> usize {
        match self {
            Retrained::Model(m) => m.classify(x),
            Retrained::Constant(y) => *y,
        }
    }

    pub fn error_rate(&self, data: &Dataset) -> f64 {
        let wrong = (0..data.len()).filter(|&j| self.classify(&data.point(j)) != data.label(j)).count();
        wrong as f64 / data.len() as f64
    }
}

/// Trains a fresh model of the given family on the target training data.
pub fn retrain(target_train: &Dataset, kind: MetricKind, config: &LvqTrainingConfig) -> Result<Retrained> {
    let labels = target_train.label_set();
    if labels.len() == 1 {
        return Ok(Retrained::Constant(target_train.label(0)));
    }
    Ok(Retrained::Model(lvq::train(target_train, config, kind)?))
}

/// Test error of a model re-trained on the target training data. Classes
/// absent from the training data are never predicted.
pub fn baseline_retrain(
    target_train: &Dataset,
    target_test: &Dataset,
    kind: MetricKind,
    config: &LvqTrainingConfig,
) -> Result<f64> {
    Ok(retrain(target_train, kind, config)?.error_rate(target_test))
}

/// Full-batch GLVQ cost of a fixed source model at `H x̂`, as a function of `H`.
pub struct GlvqTransferObjective<'a> {
    model: &'a LvqModel,
    points: Vec<DVector<f64>>,
    labels: &'a [usize],
    relevances: Vec<DMatrix<f64>>,
    phi: Sigmoid,
}

impl<'a> GlvqTransferObjective<'a> {
    pub fn new(model: &'a LvqModel, target: &'a Dataset, phi: Sigmoid) -> Result<Self> {
        lvq::glvq_cost(model, target, phi).map(|_| ())?;
        let points = (0..target.len()).map(|j| target.point(j)).collect();
        let relevances = (0..model.num_prototypes()).map(|k| model.omega(k).tr_mul(model.omega(k))).collect();
        Ok(Self { model, points, labels: target.labels(), relevances, phi })
    }

    pub fn source_dim(&self) -> usize {
        self.model.dim()
    }

    pub fn target_dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn cost(&self, h: &DMatrix<f64>) -> f64 {
        self.points
            .iter()
            .zip(self.labels)
            .map(|(x, &y)| self.phi.value(self.model.winners(&(h * x), y).expect("labels checked").mu()))
            .sum()
    }

    /// Cost and gradient. With `z = H x̂` and `Λ_k = Ω_kᵀΩ_k`,
    /// `∂d_k/∂H = −2 Λ_k (μ_k − z) x̂ᵀ`.
    pub fn cost_and_gradient(&self, h: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let mut cost = 0.0;
        let mut grad = DMatrix::zeros(h.nrows(), h.ncols());
        for (x, &y) in self.points.iter().zip(self.labels) {
            let z = h * x;
            let w = self.model.winners(&z, y).expect("labels checked");
            let mu = w.mu();
            cost += self.phi.value(mu);
            let (a_plus, a_minus) = w.mu_derivatives();
            let f = self.phi.derivative(mu);
            let protos = self.model.prototypes();
            let dz = &self.relevances[w.k_plus] * (&protos[w.k_plus] - &z) * (-2.0 * f * a_plus)
                + &self.relevances[w.k_minus] * (&protos[w.k_minus] - &z) * (-2.0 * f * a_minus);
            grad.ger(1.0, &dz, x, 1.0);
        }
        (cost, grad)
    }
}

#[derive(Clone, Debug)]
pub struct GlvqTransferFit {
    pub h: DMatrix<f64>,
    pub cost: f64,
    pub status: SolverStatus,
    pub iterations: usize,
}

/// Fits `H`, starting from the zero-padded identity, by l-BFGS on the
/// full-batch GLVQ cost of the fixed source model.
pub fn gmlvq_transfer(
    model: &LvqModel,
    target_train: &Dataset,
    phi: Sigmoid,
    solver: &SolverConfig,
) -> Result<GlvqTransferFit> {
    let objective = GlvqTransferObjective::new(model, target_train, phi)?;
    let (m, n) = (objective.source_dim(), objective.target_dim());
    let x0 = flatten_row_major(&padded_identity(m, n));
    let res = optim::minimize(
        |v| {
            let (c, g) = objective.cost_and_gradient(&unflatten_row_major(v, m, n));
            (c, flatten_row_major(&g))
        },
        x0,
        solver,
    )?;
    if res.status == SolverStatus::NumericalFailure {
        return Err(Error::NumericalFailure("GLVQ transfer produced non-finite values".into()));
    }
    Ok(GlvqTransferFit {
        h: unflatten_row_major(&res.x, m, n),
        cost: res.value,
        status: res.status,
        iterations: res.iterations,
    })
}

/// Test error of the source model after a GLVQ-cost transfer map.
pub fn baseline_gmlvq_transfer(
    model: &LvqModel,
    target_train: &Dataset,
    target_test: &Dataset,
    phi: Sigmoid,
    solver: &SolverConfig,
) -> Result<f64> {
    if target_train.dim() != target_test.dim() {
        return Err(invalid_input("training and test data differ in dimension"));
    }
    let fit = gmlvq_transfer(model, target_train, phi, solver)?;
    Ok(model.error_rate(&target_test.mapped(&fit.h)?))
}
