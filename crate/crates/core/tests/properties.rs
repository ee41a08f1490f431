mod common;

use common::*;
use emtl::datagen::{self, GeneratorSpec};
use emtl::lgmm::{fit_lgmm, LabeledGmm, LgmmFitConfig, PrecisionPolicy};
use emtl::linalg::{padded_identity, sym_eigen};
use emtl::lvq::{self, LvqModel, Metric, Sigmoid};
use emtl::optim::{minimize, SolverConfig};
use emtl::transfer::{em_transfer, TransferConfig, TransferProblem};
use emtl::{Dataset, Execution};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng as _;

fn problem<'a>(model: &'a LabeledGmm, data: &'a Dataset) -> TransferProblem<'a> {
    TransferProblem::new(model, data, PrecisionPolicy::default(), Execution::Sequential).unwrap()
}

fn random_lvq(seed: u64, k: usize, m: usize, local: bool) -> LvqModel {
    let mut rng = rng_for(seed);
    let protos = (0..k).map(|_| normal_vector(&mut rng, m)).collect();
    let labels = (0..k).map(|i| i % 3 + 1).collect();
    let metric = if local {
        Metric::Local((0..k).map(|_| normal_matrix(&mut rng, m, m)).collect())
    } else {
        Metric::Shared(normal_matrix(&mut rng, m, m))
    };
    LvqModel::new(protos, labels, metric).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posteriors_are_distributions(seed in any::<u64>(), k in 1usize..6, l in 1usize..4, m in 1usize..4) {
        let mut rng = rng_for(seed);
        let model = random_model(&mut rng, k, l, m, false);
        let ev = model.evaluator(PrecisionPolicy::default()).unwrap();
        let x = normal_vector(&mut rng, m) * 3.0;
        let p = ev.posterior_labels(&x).unwrap();
        prop_assert!((p.sum() - 1.0).abs() <= 1e-9);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn joint_densities_sum_to_mixture_density(seed in any::<u64>(), k in 1usize..6, l in 1usize..4, m in 1usize..4) {
        let mut rng = rng_for(seed);
        let model = random_model(&mut rng, k, l, m, false);
        let policy = PrecisionPolicy::default();
        let ev = model.evaluator(policy).unwrap();
        let x = normal_vector(&mut rng, m);
        let joints: Vec<f64> = (1..=l).map(|y| model.joint_density(&x, y, policy).unwrap()).collect();
        prop_assert!(joints.iter().all(|&j| j >= 0.0));
        let mixture: f64 = (0..k)
            .map(|c| model.priors()[c] * ev.log_component_density(c, &x).unwrap().exp())
            .sum();
        let total: f64 = joints.iter().sum();
        prop_assert!((total - mixture).abs() <= 1e-12 * mixture.max(f64::MIN_POSITIVE), "{total} vs {mixture}");
    }

    #[test]
    fn eigen_floor_is_exact(seed in any::<u64>(), m in 1usize..5, s in 0.01f64..10.0) {
        let mut rng = rng_for(seed);
        let b = normal_matrix(&mut rng, m, m) * 0.1;
        let lambda = b.tr_mul(&b);
        let policy = PrecisionPolicy::from_max_std(s).unwrap();
        let c = policy.condition(&lambda).unwrap();
        prop_assert!(c.eigenvalues.iter().all(|&e| e >= 1.0 / (s * s)));
    }

    #[test]
    fn classify_ignores_prior_scale(seed in any::<u64>(), k in 2usize..6, scale in 0.001f64..1000.0) {
        let mut rng = rng_for(seed);
        let model = random_model(&mut rng, k, 3, 2, false);
        let scaled = model.priors() * scale;
        let renormalized = &scaled / scaled.sum();
        let other = LabeledGmm::new(
            model.means().to_vec(),
            model.precisions().to_vec(),
            false,
            model.label_cond().clone(),
            renormalized,
        ).unwrap();
        let policy = PrecisionPolicy::default();
        let (a, b) = (model.evaluator(policy).unwrap(), other.evaluator(policy).unwrap());
        for _ in 0..20 {
            let x = normal_vector(&mut rng, 2) * 3.0;
            let p = a.posterior_labels(&x).unwrap();
            let mut sorted: Vec<f64> = p.iter().copied().collect();
            sorted.sort_by(|u, v| v.total_cmp(u));
            if sorted[0] - sorted[1] > 1e-9 {
                prop_assert_eq!(a.classify(&x).unwrap(), b.classify(&x).unwrap());
            }
        }
    }

    #[test]
    fn lvq_distance_is_nonnegative_and_sign_symmetric(seed in any::<u64>(), k in 2usize..5, m in 1usize..4, local in any::<bool>()) {
        let model = random_lvq(seed, k, m, local);
        let mut rng = rng_for(seed ^ 1);
        let v = normal_vector(&mut rng, m);
        for c in 0..k {
            let mu = &model.prototypes()[c];
            let (dp, dm) = (model.distance(c, &(mu + &v)), model.distance(c, &(mu - &v)));
            prop_assert!(dp >= 0.0 && dm >= 0.0);
            prop_assert!((dp - dm).abs() <= 1e-12 * dp.max(1.0));
        }
    }

    #[test]
    fn glvq_terms_are_bounded(seed in any::<u64>(), local in any::<bool>()) {
        let model = random_lvq(seed, 6, 2, local);
        let phi = Sigmoid::default();
        let mut rng = rng_for(seed ^ 2);
        for _ in 0..20 {
            let x = normal_vector(&mut rng, 2);
            let y = rng.random_range(1..=3);
            let t = phi.value(model.winners(&x, y).unwrap().mu());
            prop_assert!(t >= phi.value(-1.0) && t <= phi.value(1.0));
            prop_assert!(t > 0.0 && t < 1.0);
        }
    }

    #[test]
    fn converted_precisions_are_psd(seed in any::<u64>(), sigma in 0.01f64..10.0, local in any::<bool>()) {
        let model = random_lvq(seed, 4, 3, local);
        let gmm = lvq::to_lgmm(&model, sigma).unwrap();
        for p in gmm.precisions() {
            prop_assert!(sym_eigen(p).eigenvalues.iter().all(|&e| e >= -1e-9));
        }
    }

    // With one prototype per label the mixture picks argmin_k d_k − 2σ² c_k, the
    // lower envelope of lines in σ², so the nearest prototype only ever wins more.
    #[test]
    fn smaller_sigma_never_disagrees_more(seed in any::<u64>(), local in any::<bool>()) {
        let model = random_lvq(seed, 3, 2, local);
        let mut rng = rng_for(seed ^ 3);
        let points: Vec<DVector<f64>> = (0..300).map(|_| normal_vector(&mut rng, 2) * 1.5).collect();
        let base = lvq::default_sigma(&model).unwrap() * 100.0;
        let mut previous = usize::MAX;
        for step in 0..4 {
            let sigma = base / 10f64.powi(step);
            let gmm = lvq::to_lgmm(&model, sigma).unwrap();
            let ev = gmm.evaluator(PrecisionPolicy::PseudoDeterminant).unwrap();
            let disagreements = points
                .iter()
                .filter(|x| ev.classify(x).unwrap() != model.classify(x))
                .count();
            prop_assert!(disagreements <= previous, "sigma {sigma}: {disagreements} > {previous}");
            previous = disagreements;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn solver_matches_direct_solve(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = rng_for(seed);
        let a = random_spd(&mut rng, n);
        let b = normal_vector(&mut rng, n);
        let cfg = SolverConfig { gradient_tolerance: 1e-10, ..SolverConfig::default() };
        let res = minimize(|x| (0.5 * x.dot(&(&a * x)) - b.dot(x), &a * x - &b), DVector::zeros(n), &cfg).unwrap();
        let direct = a.clone().cholesky().unwrap().solve(&b);
        prop_assert!(res.converged());
        prop_assert!((&res.x - &direct).amax() <= 1e-6 * direct.amax().max(1.0));
        prop_assert!(res.iterations <= n + 5, "{} iterations for dimension {n}", res.iterations);
        prop_assert!(res.gradient.amax() <= cfg.gradient_tolerance);
        prop_assert!(res.values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn responsibilities_are_column_stochastic(seed in any::<u64>(), k in 1usize..6, l in 1usize..4, shared in any::<bool>()) {
        let mut rng = rng_for(seed);
        let model = random_model(&mut rng, k, l, 2, shared);
        let data = random_data(&mut rng, 25, 3, l);
        let h = normal_matrix(&mut rng, 2, 3);
        let (gamma, _) = problem(&model, &data).e_step(&h).unwrap();
        for col in gamma.matrix().column_iter() {
            prop_assert!((col.sum() - 1.0).abs() <= 1e-9);
            prop_assert!(col.iter().all(|&g| g >= 0.0));
        }
    }

    #[test]
    fn eq_error_is_midpoint_convex(seed in any::<u64>(), shared in any::<bool>()) {
        let mut rng = rng_for(seed);
        let model = random_model(&mut rng, 4, 2, 2, shared);
        let data = random_data(&mut rng, 20, 3, 2);
        let p = problem(&model, &data);
        let (gamma, _) = p.e_step(&padded_identity(2, 3)).unwrap();
        let h1 = normal_matrix(&mut rng, 2, 3) * 3.0;
        let h2 = normal_matrix(&mut rng, 2, 3) * 3.0;
        let mid = (&h1 + &h2) * 0.5;
        let (e1, e2, em) = (
            p.eq_error(&h1, &gamma, 0.1).unwrap(),
            p.eq_error(&h2, &gamma, 0.1).unwrap(),
            p.eq_error(&mid, &gamma, 0.1).unwrap(),
        );
        prop_assert!(em <= 0.5 * (e1 + e2) + 1e-12 * (e1 + e2));
    }

    #[test]
    fn eq_gradient_matches_finite_differences(seed in any::<u64>(), shared in any::<bool>(), ridge in prop_oneof![Just(0.0), 0.01f64..1.0]) {
        let mut rng = rng_for(seed);
        let model = random_model(&mut rng, 3, 2, 2, shared);
        let data = random_data(&mut rng, 15, 3, 2);
        let p = problem(&model, &data);
        let h = normal_matrix(&mut rng, 2, 3);
        let (gamma, _) = p.e_step(&h).unwrap();
        let g = p.eq_gradient(&h, &gamma, ridge).unwrap();
        let eps = 1e-5;
        let mut fd = DMatrix::zeros(2, 3);
        for i in 0..2 {
            for j in 0..3 {
                let mut hp = h.clone();
                hp[(i, j)] += eps;
                let mut hm = h.clone();
                hm[(i, j)] -= eps;
                fd[(i, j)] = (p.eq_error(&hp, &gamma, ridge).unwrap() - p.eq_error(&hm, &gamma, ridge).unwrap()) / (2.0 * eps);
            }
        }
        prop_assert!((&g - &fd).norm() <= 1e-5 * fd.norm().max(1.0), "{g} vs {fd}");
    }

    #[test]
    fn closed_form_is_stationary(seed in any::<u64>(), ridge in 1e-6f64..1.0) {
        let mut rng = rng_for(seed);
        let model = random_model(&mut rng, 4, 2, 2, true);
        let data = random_data(&mut rng, 30, 3, 2);
        let p = problem(&model, &data);
        let (gamma, _) = p.e_step(&padded_identity(2, 3)).unwrap();
        let h = p.m_step_closed_form(&gamma, ridge).unwrap();
        let scale = p.eq_gradient(&DMatrix::zeros(2, 3), &gamma, ridge).unwrap().amax().max(1.0);
        prop_assert!(p.eq_gradient(&h, &gamma, ridge).unwrap().amax() <= 1e-8 * scale);
    }

    #[test]
    fn gradient_step_matches_closed_form(seed in any::<u64>()) {
        let mut rng = rng_for(seed);
        let model = random_model(&mut rng, 4, 2, 2, true);
        let data = random_data(&mut rng, 30, 3, 2);
        let p = problem(&model, &data);
        let h0 = padded_identity(2, 3);
        let (gamma, _) = p.e_step(&h0).unwrap();
        let exact = p.m_step_closed_form(&gamma, 0.0).unwrap();
        let step = p.m_step_gradient(&gamma, &h0, &SolverConfig { gradient_tolerance: 1e-9, ..SolverConfig::default() }).unwrap();
        prop_assert!((&step.h - &exact).amax() <= 1e-4, "{} vs {exact}", step.h);
        prop_assert!(p.eq_error(&step.h, &gamma, 0.0).unwrap() <= p.eq_error(&h0, &gamma, 0.0).unwrap());
    }

    #[test]
    fn em_likelihood_never_decreases(seed in any::<u64>(), shared in any::<bool>()) {
        let mut rng = rng_for(seed);
        let model = random_model(&mut rng, 4, 2, 2, shared);
        let data = random_data(&mut rng, 30, 2, 2);
        let cfg = TransferConfig { ridge: Some(0.0), max_iterations: 50, exec: Execution::Sequential, ..TransferConfig::default() };
        let map = em_transfer(&model, &data, &cfg).unwrap();
        for w in map.loglik_trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-8 * w[0].abs().max(1.0), "{:?}", map.loglik_trace);
        }
    }

    #[test]
    fn crisp_one_to_one_responsibilities_ignore_h(seed in any::<u64>(), l in 1usize..5, shared in any::<bool>()) {
        let mut rng = rng_for(seed);
        let model = random_crisp_model(&mut rng, l, l, 2, shared);
        let data = random_data(&mut rng, 20, 3, l);
        let p = problem(&model, &data);
        let (g1, _) = p.e_step(&normal_matrix(&mut rng, 2, 3)).unwrap();
        let (g2, _) = p.e_step(&normal_matrix(&mut rng, 2, 3)).unwrap();
        prop_assert_eq!(g1, g2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn fit_lgmm_likelihood_is_monotone(seed in any::<u64>(), per_label in 1usize..3, shared in any::<bool>()) {
        let data = datagen::toy_source(40, seed).unwrap();
        let cfg = LgmmFitConfig {
            components_per_label: per_label,
            shared_precision: shared,
            seed,
            restarts: 2,
            exec: Execution::Sequential,
            ..LgmmFitConfig::default()
        };
        let fit = fit_lgmm(&data, &cfg).unwrap();
        for w in fit.loglik_trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "{:?}", fit.loglik_trace);
        }
    }

    #[test]
    fn generation_is_deterministic(seed in any::<u64>()) {
        prop_assert_eq!(datagen::cigars_target(20, seed).unwrap(), datagen::cigars_target(20, seed).unwrap());
        prop_assert_ne!(datagen::toy_source(20, seed).unwrap(), datagen::toy_source(20, seed.wrapping_add(1)).unwrap());
    }

    #[test]
    fn sample_covariance_matches_spec(seed in any::<u64>()) {
        let mut rng = rng_for(seed);
        let cov = random_spd(&mut rng, 3);
        let spec = GeneratorSpec {
            means: vec![normal_vector(&mut rng, 3)],
            covariances: vec![cov.clone()],
            labels: vec![1],
            points_per_component: 10_000,
            seed,
        };
        let data = datagen::sample(&spec).unwrap();
        let x = data.points();
        let mean = x.row_mean();
        let centered = DMatrix::from_fn(x.nrows(), 3, |i, j| x[(i, j)] - mean[j]);
        let sample_cov = centered.tr_mul(&centered) / (x.nrows() as f64 - 1.0);
        prop_assert!((&sample_cov - &cov).norm() <= 0.1 * cov.norm());
    }

    #[test]
    fn subsampling_after_exclusion_keeps_retained_labels(seed in any::<u64>(), n in 1usize..60, drop in 1usize..4) {
        let data = datagen::toy_target(30, seed).unwrap();
        let kept = datagen::exclude_classes(&data, &[drop]).unwrap();
        let sub = datagen::subsample_balanced(&kept, n, seed).unwrap();
        prop_assert_eq!(sub.len(), n);
        prop_assert!(sub.labels().iter().all(|&y| y != drop));
    }
}
