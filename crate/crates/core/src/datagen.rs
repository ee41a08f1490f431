//! Seeded generators for the artificial benchmark datasets.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::Dataset;
use crate::error::{invalid_input, Error, Result};
use crate::linalg::sqrt_pd;
use crate::rng;

/// A labeled Gaussian mixture to sample from; every component emits
/// `points_per_component` points with its label.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
    pub labels: Vec<usize>,
    pub points_per_component: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    /// Conjugates the generator by `r`: means `r μ`, covariances `r Σ rᵀ`.
    pub fn transformed(&self, r: &DMatrix<f64>) -> Self {
        Self {
            means: self.means.iter().map(|m| r * m).collect(),
            covariances: self.covariances.iter().map(|c| r * c * r.transpose()).collect(),
            ..self.clone()
        }
    }
}

pub fn sample(spec: &GeneratorSpec) -> Result<Dataset> {
    let k = spec.means.len();
    if k == 0 || spec.covariances.len() != k || spec.labels.len() != k {
        return Err(invalid_input("generator needs matching means, covariances and labels"));
    }
    if spec.points_per_component == 0 {
        return Err(invalid_input("points per component must be at least 1"));
    }
    let d = spec.means[0].len();
    let roots = spec
        .covariances
        .iter()
        .map(|c| {
            if c.nrows() != d || c.ncols() != d {
                return Err(invalid_input("covariance dimension mismatch"));
            }
            sqrt_pd(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = rng::stream(spec.seed, rng::stream_id(3, 0, 0));
    let n = k * spec.points_per_component;
    let mut points = DMatrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for ((mean, root), &label) in spec.means.iter().zip(&roots).zip(&spec.labels) {
        for _ in 0..spec.points_per_component {
            let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            let x = mean + root * z;
            points.row_mut(row).copy_from(&x.transpose());
            labels.push(label);
            row += 1;
        }
    }
    Dataset::new(points, labels)
}

fn v2(a: f64, b: f64) -> DVector<f64> {
    DVector::from_vec(vec![a, b])
}

/// Three isotropic classes (std 0.3) at `(−1,0)`, `(0,0)`, `(1,0)`.
pub fn toy_source_spec(n_per_class: usize, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        means: vec![v2(-1.0, 0.0), v2(0.0, 0.0), v2(1.0, 0.0)],
        covariances: vec![DMatrix::identity(2, 2) * 0.09; 3],
        labels: vec![1, 2, 3],
        points_per_component: n_per_class,
        seed,
    }
}

/// The toy source with class means moved to `(−0.1,−2)`, `(0,0)`, `(0.1,2)`.
pub fn toy_target_spec(n_per_class: usize, seed: u64) -> GeneratorSpec {
    GeneratorSpec { means: vec![v2(-0.1, -2.0), v2(0.0, 0.0), v2(0.1, 2.0)], ..toy_source_spec(n_per_class, seed) }
}

/// The toy source where the outer components share label 1.
pub fn toy_ambiguous_spec(n_per_class: usize, seed: u64) -> GeneratorSpec {
    GeneratorSpec { labels: vec![1, 2, 1], ..toy_source_spec(n_per_class, seed) }
}

pub fn cigars_source_spec(n_per_class: usize, seed: u64) -> GeneratorSpec {
    let outer = DMatrix::from_row_slice(2, 2, &[0.485, 0.36, 0.36, 0.485]);
    let middle = DMatrix::from_row_slice(2, 2, &[0.485, -0.36, -0.36, 0.485]);
    GeneratorSpec {
        means: vec![v2(-0.5, 0.0), v2(0.5, 0.0), v2(1.5, 0.0)],
        covariances: vec![outer.clone(), middle, outer],
        labels: vec![1, 2, 3],
        points_per_component: n_per_class,
        seed,
    }
}

/// The cigars source rotated by 90°.
pub fn cigars_target_spec(n_per_class: usize, seed: u64) -> GeneratorSpec {
    cigars_source_spec(n_per_class, seed).transformed(&rotation_2d(90.0))
}

pub fn rotation_2d(degrees: f64) -> DMatrix<f64> {
    let (s, c) = degrees.to_radians().sin_cos();
    // exact entries for multiples of 90°
    let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
    DMatrix::from_row_slice(2, 2, &[snap(c), -snap(s), snap(s), snap(c)])
}

pub fn toy_source(n_per_class: usize, seed: u64) -> Result<Dataset> {
    sample(&toy_source_spec(n_per_class, seed))
}

pub fn toy_target(n_per_class: usize, seed: u64) -> Result<Dataset> {
    sample(&toy_target_spec(n_per_class, seed))
}

pub fn toy_ambiguous(n_per_class: usize, seed: u64) -> Result<Dataset> {
    sample(&toy_ambiguous_spec(n_per_class, seed))
}

pub fn cigars_source(n_per_class: usize, seed: u64) -> Result<Dataset> {
    sample(&cigars_source_spec(n_per_class, seed))
}

pub fn cigars_target(n_per_class: usize, seed: u64) -> Result<Dataset> {
    sample(&cigars_target_spec(n_per_class, seed))
}

/// Drops every point whose label is listed; remaining labels keep their values.
pub fn exclude_classes(data: &Dataset, labels_to_drop: &[usize]) -> Result<Dataset> {
    let keep: Vec<usize> = (0..data.len()).filter(|&j| !labels_to_drop.contains(&data.label(j))).collect();
    if keep.is_empty() {
        return Err(Error::InvalidResult("excluding these classes leaves no data".into()));
    }
    data.select(&keep)
}

/// Draws exactly `n` points without replacement, `⌊n/L⌋` or `⌈n/L⌉` from each
/// of the `L` present classes. Which classes receive the extra point is a
/// seeded draw.
pub fn subsample_balanced(data: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || n > data.len() {
        return Err(invalid_input(format!("cannot draw {n} points from {}", data.len())));
    }
    let mut rng = rng::stream(seed, rng::stream_id(4, 0, 0));
    let classes: Vec<usize> = data.label_set().into_iter().collect();
    let base = n / classes.len();
    let mut extra: Vec<bool> = (0..classes.len()).map(|i| i < n % classes.len()).collect();
    extra.shuffle(&mut rng);

    let mut chosen = Vec::with_capacity(n);
    for (&y, &plus) in classes.iter().zip(&extra) {
        let want = base + usize::from(plus);
        let mut idx = data.indices_of(y);
        if idx.len() < want {
            return Err(invalid_input(format!("class {y} has {} points but {want} are required", idx.len())));
        }
        idx.shuffle(&mut rng);
        chosen.extend_from_slice(&idx[..want]);
    }
    data.select(&chosen)
}
