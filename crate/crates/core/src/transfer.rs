//! Linear supervised transfer learning by expectation maximization.
//!
//! Given a fixed source model and labeled target data `(x̂_j, ŷ_j)`, learns
//! `H ∈ R^{m×n}` maximizing `Σ_j log p(H x̂_j, ŷ_j)`. The E-step computes
//! responsibilities `γ_{k|j}`; the M-step minimizes the convex weighted
//! quadratic error
//!
//! ```text
//! E_Q(H) = Σ_j Σ_k γ_{k|j} (H x̂_j − μ_k)ᵀ Λ_k (H x̂_j − μ_k)
//! ```
//!
//! in closed form when all precisions are shared and with l-BFGS otherwise.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{invalid_config, invalid_input, Error, Result};
use crate::lgmm::{GmmEvaluator, LabeledGmm, PrecisionPolicy};
use crate::linalg::{flatten_row_major, padded_identity, sym_eigen, unflatten_row_major};
use crate::optim::{self, SolverConfig, SolverStatus};
use crate::par::{self, Execution};

/// Column-stochastic `K×N` matrix `Γ_{kj} = γ_{k|j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Responsibilities {
    gamma: DMatrix<f64>,
}

impl Responsibilities {
    pub fn new(gamma: DMatrix<f64>) -> Result<Self> {
        for (j, col) in gamma.column_iter().enumerate() {
            if col.iter().any(|&g| !(0.0..=1.0).contains(&g)) || (col.sum() - 1.0).abs() > 1e-9 {
                return Err(invalid_input(format!("responsibility column {j} is not a distribution")));
            }
        }
        Ok(Self { gamma })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn num_components(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn num_points(&self) -> usize {
        self.gamma.ncols()
    }
}

/// Per-component sufficient statistics of `(Γ, X̂)` for the M-step.
struct QuadraticStats {
    /// `A_k = Σ_j γ_{k|j} x̂_j x̂_jᵀ`
    second: Vec<DMatrix<f64>>,
    /// `b_k = Σ_j γ_{k|j} x̂_j`
    first: Vec<DVector<f64>>,
    /// `Σ_j γ_{k|j} μ_kᵀ Λ_k μ_k`
    constant: f64,
}

/// A source model, its conditioned precisions and a target dataset.
pub struct TransferProblem<'a> {
    eval: GmmEvaluator<'a>,
    target: &'a Dataset,
    xhat: DMatrix<f64>,
    exec: Execution,
}

impl<'a> TransferProblem<'a> {
    pub fn new(model: &'a LabeledGmm, target: &'a Dataset, policy: PrecisionPolicy, exec: Execution) -> Result<Self> {
        if target.max_label() > model.num_labels() {
            return Err(invalid_input(format!(
                "target label {} exceeds the model's {} labels",
                target.max_label(),
                model.num_labels()
            )));
        }
        Ok(Self { eval: model.evaluator(policy)?, target, xhat: target.columns(), exec })
    }

    pub fn model(&self) -> &'a LabeledGmm {
        self.eval.model()
    }

    pub fn source_dim(&self) -> usize {
        self.model().dim()
    }

    pub fn target_dim(&self) -> usize {
        self.target.dim()
    }

    pub fn shared_precision(&self) -> bool {
        self.model().shared_precision()
    }

    /// `1e-8 · trace(X̂ X̂ᵀ) / n`.
    pub fn default_ridge(&self) -> f64 {
        1e-8 * self.xhat.norm_squared() / self.target_dim() as f64
    }

    fn check_map(&self, h: &DMatrix<f64>) -> Result<()> {
        if h.nrows() != self.source_dim() || h.ncols() != self.target_dim() {
            return Err(invalid_input(format!(
                "H must be {}x{}, got {}x{}",
                self.source_dim(),
                self.target_dim(),
                h.nrows(),
                h.ncols()
            )));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(invalid_input("H has non-finite entries"));
        }
        Ok(())
    }

    fn check_gamma(&self, gamma: &Responsibilities) -> Result<()> {
        if gamma.num_components() != self.model().num_components() || gamma.num_points() != self.target.len() {
            return Err(invalid_input("responsibilities do not match model and data"));
        }
        Ok(())
    }

    /// Responsibilities at `H` together with the log-likelihood
    /// `Σ_j log p(H x̂_j, ŷ_j)`.
    pub fn e_step(&self, h: &DMatrix<f64>) -> Result<(Responsibilities, f64)> {
        self.check_map(h)?;
        let k_total = self.model().num_components();
        let mapped = h * &self.xhat;
        let columns = par::try_map_indexed(self.exec, self.target.len(), |j| {
            let z: DVector<f64> = mapped.column(j).into_owned();
            let y = self.target.label(j);
            let logs: Vec<f64> = (0..k_total)
                .map(|k| {
                    let lc = self.eval.log_label_cond(k, y);
                    if lc == f64::NEG_INFINITY {
                        lc
                    } else {
                        self.eval.log_density_unchecked(k, &z) + lc + self.eval.log_prior(k)
                    }
                })
                .collect();
            let lse = crate::linalg::log_sum_exp(logs.iter().copied());
            if !lse.is_finite() {
                return Err(Error::DegenerateResponsibility { index: j });
            }
            Ok((logs.into_iter().map(|l| (l - lse).exp()).collect::<Vec<f64>>(), lse))
        })?;
        let mut gamma = DMatrix::zeros(k_total, self.target.len());
        let mut loglik = 0.0;
        for (j, (col, lse)) in columns.into_iter().enumerate() {
            gamma.column_mut(j).copy_from_slice(&col);
            loglik += lse;
        }
        Ok((Responsibilities { gamma }, loglik))
    }

    /// `Σ_j log p(H x̂_j, ŷ_j)`.
    pub fn log_likelihood(&self, h: &DMatrix<f64>) -> Result<f64> {
        self.e_step(h).map(|(_, ll)| ll)
    }

    fn ridge_active(&self, ridge: f64) -> bool {
        ridge > 0.0 && self.shared_precision()
    }

    /// `E_Q(H)`, plus `λ·trace(Λ H Hᵀ)` when precisions are shared.
    pub fn eq_error(&self, h: &DMatrix<f64>, gamma: &Responsibilities, ridge: f64) -> Result<f64> {
        self.check_map(h)?;
        self.check_gamma(gamma)?;
        let mapped = h * &self.xhat;
        let means = self.model().means();
        let mut total = 0.0;
        for (k, mu) in means.iter().enumerate() {
            let lambda = self.eval.precision(k);
            for j in 0..self.target.len() {
                let g = gamma.gamma[(k, j)];
                if g == 0.0 {
                    continue;
                }
                let r = mapped.column(j) - mu;
                total += g * r.dot(&(lambda * &r));
            }
        }
        if self.ridge_active(ridge) {
            total += ridge * (self.eval.precision(0) * h * h.transpose()).trace();
        }
        Ok(total)
    }

    /// `∇_H E_Q = 2 Σ_k Λ_k Σ_j γ_{k|j} (H x̂_j − μ_k) x̂_jᵀ` (+ `2λΛH`).
    pub fn eq_gradient(&self, h: &DMatrix<f64>, gamma: &Responsibilities, ridge: f64) -> Result<DMatrix<f64>> {
        self.check_map(h)?;
        self.check_gamma(gamma)?;
        let stats = self.stats(gamma);
        Ok(self.stats_value_gradient(&stats, h, ridge).1)
    }

    fn stats(&self, gamma: &Responsibilities) -> QuadraticStats {
        let model = self.model();
        let n = self.target_dim();
        let mut second = Vec::with_capacity(model.num_components());
        let mut first = Vec::with_capacity(model.num_components());
        let mut constant = 0.0;
        for (k, mu) in model.means().iter().enumerate() {
            let weights = gamma.gamma.row(k);
            let mut a = DMatrix::zeros(n, n);
            let mut b = DVector::zeros(n);
            for j in 0..self.target.len() {
                let g = weights[j];
                if g == 0.0 {
                    continue;
                }
                let x = self.xhat.column(j);
                a.ger(g, &x, &x, 1.0);
                b.axpy(g, &x, 1.0);
            }
            constant += weights.sum() * mu.dot(&(self.eval.precision(k) * mu));
            second.push(a);
            first.push(b);
        }
        QuadraticStats { second, first, constant }
    }

    fn stats_value_gradient(&self, stats: &QuadraticStats, h: &DMatrix<f64>, ridge: f64) -> (f64, DMatrix<f64>) {
        let mut value = stats.constant;
        let mut grad = DMatrix::zeros(h.nrows(), h.ncols());
        for (k, mu) in self.model().means().iter().enumerate() {
            let lambda = self.eval.precision(k);
            let ha = h * &stats.second[k];
            let resid = &ha - mu * stats.first[k].transpose();
            let lr = lambda * &resid;
            value += (lambda * &ha).component_mul(h).sum() - 2.0 * mu.dot(&(lambda * (h * &stats.first[k])));
            grad += lr * 2.0;
        }
        if self.ridge_active(ridge) {
            let lh = self.eval.precision(0) * h;
            value += ridge * lh.component_mul(h).sum();
            grad += lh * (2.0 * ridge);
        }
        (value, grad)
    }

    /// `H = W Γ X̂ᵀ (X̂ X̂ᵀ + λI)⁻¹`; requires shared precisions.
    pub fn m_step_closed_form(&self, gamma: &Responsibilities, ridge: f64) -> Result<DMatrix<f64>> {
        self.check_gamma(gamma)?;
        if !self.shared_precision() {
            return Err(invalid_input("closed-form M-step requires shared precision matrices"));
        }
        if !(ridge >= 0.0) || !ridge.is_finite() {
            return Err(invalid_config("ridge must be finite and non-negative"));
        }
        let n = self.target_dim();
        let gram = &self.xhat * self.xhat.transpose();
        if ridge == 0.0 {
            let eig = sym_eigen(&gram).eigenvalues;
            let max = eig.max();
            if !(eig.min() > 1e-12 * max) {
                return Err(Error::SingularSystem("X̂X̂ᵀ is rank deficient; use a positive ridge".into()));
            }
        }
        let system = gram + DMatrix::identity(n, n) * ridge;
        let rhs = self.model().mean_matrix() * &gamma.gamma * self.xhat.transpose();
        let chol = system
            .cholesky()
            .ok_or_else(|| Error::SingularSystem("normal equations are not positive definite".into()))?;
        // H S = R with S symmetric  ⇔  S Hᵀ = Rᵀ
        Ok(chol.solve(&rhs.transpose()).transpose())
    }

    /// Minimizes `E_Q` with l-BFGS from `h_init`.
    pub fn m_step_gradient(
        &self,
        gamma: &Responsibilities,
        h_init: &DMatrix<f64>,
        solver: &SolverConfig,
    ) -> Result<GradientStep> {
        self.check_map(h_init)?;
        self.check_gamma(gamma)?;
        let stats = self.stats(gamma);
        let (m, n) = (self.source_dim(), self.target_dim());
        let objective = |v: &DVector<f64>| {
            let h = unflatten_row_major(v, m, n);
            let (value, grad) = self.stats_value_gradient(&stats, &h, 0.0);
            (value, flatten_row_major(&grad))
        };
        let res = optim::minimize(objective, flatten_row_major(h_init), solver)?;
        Ok(GradientStep {
            h: unflatten_row_major(&res.x, m, n),
            status: res.status,
            gradient_max_norm: res.gradient.amax(),
            iterations: res.iterations,
            evaluations: res.evaluations,
        })
    }
}

#[derive(Clone, Debug)]
pub struct GradientStep {
    pub h: DMatrix<f64>,
    pub status: SolverStatus,
    pub gradient_max_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransferConfig {
    /// Convergence threshold on `|E − E′|`, relative to `max(1, E_Q(H₀))`.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Ridge `λ`; `None` selects `1e-8 · trace(X̂X̂ᵀ)/n`.
    pub ridge: Option<f64>,
    pub policy: PrecisionPolicy,
    pub solver: SolverConfig,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            max_iterations: 200,
            ridge: None,
            policy: PrecisionPolicy::default(),
            solver: SolverConfig::default(),
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferStatus {
    Converged,
    MaxIterations,
    /// The gradient M-step stopped on non-finite values; `h` is its best iterate.
    SolverFailure,
}

/// A learned map `H` with its fit diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMap {
    pub h: DMatrix<f64>,
    pub iterations: usize,
    pub status: TransferStatus,
    /// `E_Q` after every M-step.
    pub eq_error_trace: Vec<f64>,
    /// Target log-likelihood after every M-step.
    pub loglik_trace: Vec<f64>,
}

impl TransferMap {
    /// A map that is not the result of a fit.
    pub fn from_matrix(h: DMatrix<f64>) -> Self {
        Self { h, iterations: 0, status: TransferStatus::Converged, eq_error_trace: vec![], loglik_trace: vec![] }
    }

    pub fn converged(&self) -> bool {
        self.status == TransferStatus::Converged
    }

    pub fn final_eq_error(&self) -> Option<f64> {
        self.eq_error_trace.last().copied()
    }

    pub fn source_dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn target_dim(&self) -> usize {
        self.h.ncols()
    }

    /// `H x̂`.
    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.target_dim() {
            return Err(invalid_input(format!(
                "map expects dimension {} but point has {}",
                self.target_dim(),
                x.len()
            )));
        }
        Ok(&self.h * x)
    }

    pub fn apply_dataset(&self, data: &Dataset) -> Result<Dataset> {
        data.mapped(&self.h)
    }
}

pub fn apply_transfer(map: &TransferMap, x: &DVector<f64>) -> Result<DVector<f64>> {
    map.apply(x)
}

/// Learns `H` by alternating E- and M-steps until `E_Q` changes by less than
/// the threshold, starting from the zero-padded identity.
pub fn em_transfer(model: &LabeledGmm, target: &Dataset, config: &TransferConfig) -> Result<TransferMap> {
    if !(config.epsilon > 0.0) || config.max_iterations == 0 {
        return Err(invalid_config("epsilon must be positive and max_iterations at least 1"));
    }
    if config.ridge.is_some_and(|r| !(r >= 0.0) || !r.is_finite()) {
        return Err(invalid_config("ridge must be finite and non-negative"));
    }
    let problem = TransferProblem::new(model, target, config.policy, config.exec)?;
    let shared = problem.shared_precision();
    let ridge = if shared { config.ridge.unwrap_or_else(|| problem.default_ridge()) } else { 0.0 };

    let mut h = padded_identity(problem.source_dim(), problem.target_dim());
    let (mut gamma, _) = problem.e_step(&h)?;
    let threshold = config.epsilon * problem.eq_error(&h, &gamma, ridge)?.max(1.0);

    let mut eq_trace = Vec::new();
    let mut ll_trace = Vec::new();
    let mut previous = f64::INFINITY;
    let mut status = TransferStatus::MaxIterations;
    for _ in 0..config.max_iterations {
        let next = if shared {
            problem.m_step_closed_form(&gamma, ridge)?
        } else {
            let step = problem.m_step_gradient(&gamma, &h, &config.solver)?;
            if step.status == SolverStatus::NumericalFailure {
                status = TransferStatus::SolverFailure;
                h = step.h;
                break;
            }
            step.h
        };
        let current = problem.eq_error(&next, &gamma, ridge)?;
        let (next_gamma, ll) = problem.e_step(&next)?;
        eq_trace.push(current);
        ll_trace.push(ll);
        h = next;
        if (previous - current).abs() < threshold {
            status = TransferStatus::Converged;
            break;
        }
        previous = current;
        gamma = next_gamma;
    }
    Ok(TransferMap { h, iterations: eq_trace.len(), status, eq_error_trace: eq_trace, loglik_trace: ll_trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn fig2_means() -> Vec<DVector<f64>> {
        vec![v(&[-1.0, 0.0]), v(&[0.0, 0.0]), v(&[1.0, 0.0])]
    }

    fn fig2_model(labels: &[usize], num_labels: usize) -> LabeledGmm {
        let lambda = DMatrix::identity(2, 2) / 0.09;
        LabeledGmm::crisp(fig2_means(), vec![lambda; 3], labels, num_labels).unwrap()
    }

    fn problem<'a>(model: &'a LabeledGmm, data: &'a Dataset) -> TransferProblem<'a> {
        TransferProblem::new(model, data, PrecisionPolicy::default(), Execution::Sequential).unwrap()
    }

    #[test]
    fn crisp_one_to_one_responsibilities_ignore_h() {
        let model = fig2_model(&[1, 2, 3], 3);
        let data = Dataset::from_rows(&[vec![0.3, 1.0], vec![-2.0, 0.5], vec![4.0, 4.0]], vec![2, 1, 3]).unwrap();
        let p = problem(&model, &data);
        let (g1, _) = p.e_step(&DMatrix::from_row_slice(2, 2, &[0.3, -1.2, 2.0, 0.7])).unwrap();
        let (g2, _) = p.e_step(&DMatrix::from_row_slice(2, 2, &[-5.0, 0.1, 0.0, 9.0])).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(g1.matrix().column(0).as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn identical_components_split_evenly() {
        let model =
            LabeledGmm::crisp(vec![v(&[0.0]), v(&[0.0])], vec![DMatrix::identity(1, 1); 2], &[1, 1], 1).unwrap();
        let data = Dataset::from_rows(&[vec![0.7]], vec![1]).unwrap();
        let (g, _) = problem(&model, &data).e_step(&DMatrix::identity(1, 1)).unwrap();
        assert_relative_eq!(g.matrix()[(0, 0)], 0.5, epsilon = 1e-15);
        assert_relative_eq!(g.matrix()[(1, 0)], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn ambiguous_model_splits_towards_nearer_component() {
        let model = fig2_model(&[1, 2, 1], 2);
        let data = Dataset::from_rows(&[vec![0.1, 2.0]], vec![1]).unwrap();
        let (g, _) = problem(&model, &data).e_step(&DMatrix::identity(2, 2)).unwrap();
        let col = g.matrix().column(0);
        assert_eq!(col[1], 0.0);
        assert!(col[2] > col[0]);
        // ratio of two Gaussians with equal precision 1/0.09
        let d1 = 1.1f64.powi(2) + 4.0;
        let d3 = 0.9f64.powi(2) + 4.0;
        assert_relative_eq!(col[2] / col[0], (-0.5 / 0.09 * (d3 - d1)).exp(), max_relative = 1e-10);
        let (g, _) = problem(&model, &Dataset::from_rows(&[vec![0.0, -2.0]], vec![1]).unwrap())
            .e_step(&DMatrix::identity(2, 2))
            .unwrap();
        assert_relative_eq!(g.matrix()[(0, 0)], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn impossible_label_names_point() {
        let model = fig2_model(&[1, 2, 1], 3);
        let data = Dataset::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]], vec![1, 3]).unwrap();
        let err = problem(&model, &data).e_step(&DMatrix::identity(2, 2));
        assert!(matches!(err, Err(Error::DegenerateResponsibility { index: 1 })));
    }

    #[test]
    fn eq_error_zero_at_exact_fit_and_residual_otherwise() {
        let model = LabeledGmm::crisp(vec![v(&[2.0, 3.0])], vec![DMatrix::identity(2, 2)], &[1], 1).unwrap();
        let data = Dataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], vec![1, 1]).unwrap();
        let p = problem(&model, &data);
        let (g, _) = p.e_step(&DMatrix::identity(2, 2)).unwrap();
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 3.0, 3.0]);
        assert_eq!(p.eq_error(&h, &g, 0.0).unwrap(), 0.0);

        let one = Dataset::from_rows(&[vec![1.0, 0.0]], vec![1]).unwrap();
        let p = problem(&model, &one);
        let (g, _) = p.e_step(&DMatrix::identity(2, 2)).unwrap();
        // residual (1,0) − (2,3)
        assert_relative_eq!(p.eq_error(&DMatrix::identity(2, 2), &g, 0.0).unwrap(), 10.0);
    }

    #[test]
    fn single_term_gradient() {
        let model = LabeledGmm::crisp(vec![v(&[0.0, 0.0])], vec![DMatrix::identity(2, 2)], &[1], 1).unwrap();
        let data = Dataset::from_rows(&[vec![0.5, -2.0, 1.0]], vec![1]).unwrap();
        let p = problem(&model, &data);
        let h = DMatrix::from_row_slice(2, 3, &[0.1, 0.2, 0.3, -1.0, 0.5, 2.0]);
        let (g, _) = p.e_step(&h).unwrap();
        let x = v(&[0.5, -2.0, 1.0]);
        let expected = (&h * &x) * x.transpose() * 2.0;
        assert_relative_eq!(p.eq_gradient(&h, &g, 0.0).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_on_identity_design() {
        let model = LabeledGmm::crisp(vec![v(&[2.0, 3.0])], vec![DMatrix::identity(2, 2)], &[1], 1).unwrap();
        let data = Dataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], vec![1, 1]).unwrap();
        let p = problem(&model, &data);
        let (g, _) = p.e_step(&DMatrix::identity(2, 2)).unwrap();
        let h = p.m_step_closed_form(&g, 0.0).unwrap();
        assert_relative_eq!(h, DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 3.0, 3.0]), epsilon = 1e-12);
        assert_relative_eq!(&h * v(&[1.0, 0.0]), v(&[2.0, 3.0]), epsilon = 1e-12);
    }

    #[test]
    fn rank_deficient_design_needs_ridge() {
        let model = fig2_model(&[1, 2, 3], 3);
        // all points on one line through the origin
        let data = Dataset::from_rows(&[vec![1.0, 2.0], vec![-0.5, -1.0], vec![2.0, 4.0]], vec![1, 2, 3]).unwrap();
        let p = problem(&model, &data);
        let (g, _) = p.e_step(&DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(p.m_step_closed_form(&g, 0.0), Err(Error::SingularSystem(_))));
        assert!(p.m_step_closed_form(&g, 1e-6).is_ok());
    }

    #[test]
    fn one_to_one_model_converges_in_two_iterations() {
        let model = fig2_model(&[1, 2, 3], 3);
        let data = Dataset::from_rows(
            &[vec![-0.1, -2.0], vec![0.05, -1.8], vec![0.0, 0.1], vec![0.2, -0.1], vec![0.1, 2.1]],
            vec![1, 1, 2, 2, 3],
        )
        .unwrap();
        let map = em_transfer(&model, &data, &TransferConfig::default()).unwrap();
        assert!(map.converged());
        assert_eq!(map.iterations, 2);
        assert_eq!(map.eq_error_trace.len(), 2);
        assert_eq!(map.loglik_trace.len(), 2);
    }

    #[test]
    fn apply_examples() {
        let pad = TransferMap::from_matrix(padded_identity(3, 2));
        assert_eq!(pad.apply(&v(&[4.0, 5.0])).unwrap(), v(&[4.0, 5.0, 0.0]));
        let zero = TransferMap::from_matrix(DMatrix::zeros(2, 2));
        assert_eq!(zero.apply(&v(&[4.0, 5.0])).unwrap(), v(&[0.0, 0.0]));
        let h = TransferMap::from_matrix(DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 3.0, 3.0]));
        assert_eq!(apply_transfer(&h, &v(&[1.0, 0.0])).unwrap(), v(&[2.0, 3.0]));
        assert!(h.apply(&v(&[1.0])).is_err());
    }
}
