#![allow(dead_code)]

use emtl::lgmm::LabeledGmm;
use emtl::rng::{self, Rng};
use emtl::Dataset;
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

pub fn rng_for(seed: u64) -> Rng {
    rng::stream(seed, 99)
}

pub fn normal_matrix(rng: &mut Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn normal_vector(rng: &mut Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// `BᵀB + 0.2 I`, well conditioned.
pub fn random_spd(rng: &mut Rng, m: usize) -> DMatrix<f64> {
    let b = normal_matrix(rng, m, m);
    b.tr_mul(&b) + DMatrix::identity(m, m) * 0.2
}

/// Mixture with `k` components, soft label distributions over `l` labels and
/// random priors, so every labeled point has positive mass.
pub fn random_model(rng: &mut Rng, k: usize, l: usize, m: usize, shared: bool) -> LabeledGmm {
    let means = (0..k).map(|_| normal_vector(rng, m) * 2.0).collect();
    let precisions = if shared { vec![random_spd(rng, m); k] } else { (0..k).map(|_| random_spd(rng, m)).collect() };
    let mut label_cond = DMatrix::from_fn(k, l, |_, _| rng.random_range(0.1..1.0));
    for mut row in label_cond.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    let raw = DVector::from_fn(k, |_, _| rng.random_range(0.2..1.0));
    let priors = &raw / raw.sum();
    LabeledGmm::new(means, precisions, shared, label_cond, priors).unwrap()
}

/// Mixture with crisp labels: component `k` emits label `k mod l + 1`.
pub fn random_crisp_model(rng: &mut Rng, k: usize, l: usize, m: usize, shared: bool) -> LabeledGmm {
    let means = (0..k).map(|_| normal_vector(rng, m) * 2.0).collect();
    let precisions = if shared { vec![random_spd(rng, m); k] } else { (0..k).map(|_| random_spd(rng, m)).collect() };
    let labels: Vec<usize> = (0..k).map(|c| c % l + 1).collect();
    LabeledGmm::crisp(means, precisions, &labels, l).unwrap()
}

/// `n_points` standard normal points in `dim` dimensions, labels cycling through `1..=l`.
pub fn random_data(rng: &mut Rng, n_points: usize, dim: usize, l: usize) -> Dataset {
    let points = normal_matrix(rng, n_points, dim);
    Dataset::new(points, (0..n_points).map(|j| j % l + 1).collect()).unwrap()
}
