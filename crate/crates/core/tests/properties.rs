//! Property tests for the population oracles, sampling and initialization.

use proptest::prelude::*;
use relu_gd_lab::marginals::sample_marginal;
use relu_gd_lab::oracles::{joint_orthant_prob_gauss, population_F0_gauss, population_F_gauss, population_gradF_gauss};
use relu_gd_lab::seed::derive_named;
use relu_gd_lab::{draw_init, generate_dataset, GaussOracle, InitSpec, Instance, MarginalSpec, WeightVector};

fn weight(dim: usize) -> impl Strategy<Value = WeightVector> {
    (prop::collection::vec(-2.0f64..2.0, dim), -2.0f64..2.0).prop_map(|(w, b)| WeightVector::new(w, b).unwrap())
}

fn pair() -> impl Strategy<Value = (WeightVector, WeightVector)> {
    (1usize..6).prop_flat_map(|d| (weight(d), weight(d)))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn loss_is_nonnegative_symmetric_and_zero_on_diagonal((w, v) in pair()) {
        let f = population_F_gauss(&w, &v).unwrap();
        prop_assert!(f >= 0.0);
        prop_assert!(close(f, population_F_gauss(&v, &w).unwrap(), 1e-12));
        prop_assert!(population_F_gauss(&v, &v).unwrap().abs() < 1e-14);
        prop_assert!(population_gradF_gauss(&v, &v).unwrap().vector.norm() < 1e-12);
    }

    #[test]
    fn loss_is_two_homogeneous((w, v) in pair(), alpha in 0.1f64..10.0) {
        let f = population_F_gauss(&w, &v).unwrap();
        let g = population_F_gauss(&w.scaled(alpha), &v.scaled(alpha)).unwrap();
        prop_assert!(close(g, alpha * alpha * f, 1e-10), "{g} vs {}", alpha * alpha * f);
    }

    #[test]
    fn loss_bounded_by_squared_distance((w, v) in pair()) {
        let f = population_F_gauss(&w, &v).unwrap();
        prop_assert!(f <= w.sub(&v).norm_sq() + 1e-12);
    }

    #[test]
    fn zero_weight_matches_closed_form((_, v) in pair()) {
        let f = population_F_gauss(&WeightVector::zeros(v.dim()), &v).unwrap();
        prop_assert!(close(f, population_F0_gauss(&v), 1e-12));
    }

    #[test]
    fn orthant_probability_is_a_symmetric_probability((w, v) in pair()) {
        let p = joint_orthant_prob_gauss(&w, &v).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p - joint_orthant_prob_gauss(&v, &w).unwrap()).abs() < 1e-12);
        prop_assert!(p <= joint_orthant_prob_gauss(&w, &w).unwrap() + 1e-12);
    }

    #[test]
    fn closed_form_and_quadrature_agree((w, v) in pair()) {
        let exact = GaussOracle::default().eval(&w, &v).unwrap();
        let quad = GaussOracle::quadrature(64).eval(&w, &v).unwrap();
        prop_assert!(close(exact.f, quad.f, 1e-7), "{} vs {}", exact.f, quad.f);
        let (ge, gq) = (exact.gradient(&w, &v), quad.gradient(&w, &v));
        prop_assert!(ge.sub(&gq).norm() <= 1e-7 * (1.0 + ge.norm()));
    }

    #[test]
    fn sampling_is_seed_deterministic(d in 1usize..8, seed in any::<u64>()) {
        let m = MarginalSpec::gaussian(d);
        let a = sample_marginal(&m, 16, seed);
        let b = sample_marginal(&m, 16, seed);
        prop_assert!(a.rows().zip(b.rows()).all(|(x, y)| x == y));
    }

    #[test]
    fn named_seeds_separate_streams(seed in any::<u64>(), i in 0u64..1000) {
        prop_assert_ne!(derive_named(seed, "a", &[i]), derive_named(seed, "b", &[i]));
        prop_assert_ne!(derive_named(seed, "a", &[i]), derive_named(seed, "a", &[i + 1]));
    }

    #[test]
    fn init_has_zero_bias_and_ladder_radius(d in 1usize..20, seed in any::<u64>(), m in 1.0f64..4096.0) {
        let known = draw_init(&InitSpec::KnownScale { scale: 1.5, beta: 1.0 }, d, seed).unwrap();
        prop_assert_eq!(known.w0.bias(), 0.0);
        prop_assert!(known.j.is_none());
        prop_assert!(close(known.w0.w_tilde_norm(), known.rho * 1.5, 1e-12));
        let spec = InitSpec::UnknownScale { m, beta: 1.0 };
        let o = draw_init(&spec, d, seed).unwrap();
        let j = o.j.unwrap();
        prop_assert!(j.abs() <= spec.ladder_half_width());
        prop_assert_eq!(o.w0.bias(), 0.0);
    }

    #[test]
    fn label_scaling_is_linear(seed in any::<u64>(), alpha in -5.0f64..5.0) {
        let inst = Instance::gaussian_with_opt(WeightVector::axis(3, 0, 1.0, 0.2), 1e-2).unwrap();
        let ds = generate_dataset(&inst, 32, seed).unwrap();
        let scaled = ds.scale_labels(alpha);
        for (a, b) in ds.iter().zip(scaled.iter()) {
            prop_assert_eq!(a.0, b.0);
            prop_assert!((b.1 - alpha * a.1).abs() <= 1e-15 * (1.0 + a.1.abs()));
        }
    }
}
