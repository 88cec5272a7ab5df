mod common;

use common::{order, reference, ALPHA_VALUES};
use dftr_core::operator::characteristic_roots;
use dftr_core::{
    build_generator, dissipativity_form, resolvent_analytic, resolvent_discrete, Profile,
    SpatialGrid,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn resolvent_gap(nodes: usize, lambda: f64, alpha: f64) -> f64 {
    let p = reference();
    let g = SpatialGrid::new(1.0, nodes).unwrap();
    let eta = Profile::constant(g, 1.0);
    let exact = resolvent_analytic(&eta, lambda, &p, alpha).unwrap().xi;
    let gen = build_generator(g, &p, alpha).unwrap();
    let discrete = resolvent_discrete(&gen, &eta, lambda).unwrap();
    common::relative_l2(&discrete, &exact)
}

#[test]
fn resolvent_discrete_converges_to_closed_form() {
    for lambda in [0.1, 1.0, 10.0] {
        for alpha in ALPHA_VALUES {
            let errors: Vec<f64> = [101, 201, 401]
                .iter()
                .map(|&n| resolvent_gap(n, lambda, alpha))
                .collect();
            assert!(
                errors[2] <= 1e-3,
                "lambda={lambda} alpha={alpha}: {errors:?}"
            );
            for o in order(&errors) {
                assert!(
                    (o - 2.0).abs() <= 0.3,
                    "lambda={lambda} alpha={alpha}: {errors:?}"
                );
            }
        }
    }
}

#[test]
fn resolvent_converges_for_variable_forcing() {
    let p = reference();
    let errors: Vec<f64> = [101, 201, 401]
        .iter()
        .map(|&n| {
            let g = SpatialGrid::new(1.0, n).unwrap();
            let eta = Profile::from_fn(g, |x: f64| (4.0 * x).sin() + x * x);
            let exact = resolvent_analytic(&eta, 0.5, &p, 0.25).unwrap().xi;
            let gen = build_generator(g, &p, 0.25).unwrap();
            common::relative_l2(&resolvent_discrete(&gen, &eta, 0.5).unwrap(), &exact)
        })
        .collect();
    for o in order(&errors) {
        assert!((o - 2.0).abs() <= 0.3, "{errors:?}");
    }
}

#[test]
fn seeded_dissipativity_at_reference_resolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for alpha in ALPHA_VALUES {
        let gen =
            build_generator(SpatialGrid::new(1.0, 201).unwrap(), &reference(), alpha).unwrap();
        for _ in 0..100 {
            let xi = gen.random_domain_vector(&mut rng);
            let rep = dissipativity_form(&gen, &xi).unwrap();
            assert!(rep.quadratic_form <= 1e-8 * rep.norm_sq);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dissipative_for_any_seed_gain_and_resolution(
        seed in any::<u64>(),
        alpha in 0.0f64..=0.5,
        nodes in 101usize..400,
    ) {
        let gen = build_generator(SpatialGrid::new(1.0, nodes).unwrap(), &reference(), alpha).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xi = gen.random_domain_vector(&mut rng);
        let rep = dissipativity_form(&gen, &xi).unwrap();
        prop_assert!(rep.quadratic_form <= 1e-8 * rep.norm_sq);
        prop_assert!(rep.energy_identity <= 0.0);
    }

    #[test]
    fn roots_solve_characteristic_equation(lambda in 1e-6f64..1e3) {
        let p = reference();
        let (nu1, nu2) = characteristic_roots(&p, lambda);
        prop_assert!(nu1 < 0.0 && 0.0 < nu2);
        for nu in [nu1, nu2] {
            let resid = p.d_ax() * nu * nu - p.v() * nu - lambda;
            prop_assert!(resid.abs() <= 1e-12 * (lambda + p.d_ax() * nu * nu));
        }
    }

    #[test]
    fn discrete_resolvent_resubstitutes(seed in any::<u64>(), lambda in 0.01f64..100.0, alpha in 0.0f64..=0.5) {
        use rand::Rng;
        let g = SpatialGrid::new(1.0, 151).unwrap();
        let gen = build_generator(g, &reference(), alpha).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eta = Profile::new(g, (0..151).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let xi = resolvent_discrete(&gen, &eta, lambda).unwrap();
        let back = gen.apply(&xi).unwrap().sub(&xi.scaled(lambda)).unwrap().sub(&eta).unwrap();
        prop_assert!(back.max_abs() <= 1e-12 * eta.max_abs().max(1.0) * (1.0 + lambda));
    }

    #[test]
    fn analytic_resolvent_satisfies_boundary_conditions(lambda in 0.01f64..50.0, alpha in 0.0f64..=0.5) {
        let p = reference();
        let g = SpatialGrid::new(1.0, 101).unwrap();
        let eta = Profile::from_fn(g, |x: f64| (5.0 * x).cos());
        let s = resolvent_analytic(&eta, lambda, &p, alpha).unwrap();
        let scale = s.xi.max_abs() + s.xi_prime.max_abs() * p.d_ax() / p.v();
        prop_assert!(((1.0 - alpha) * s.xi.first() - p.d_ax() / p.v() * s.xi_prime.first()).abs() <= 1e-12 * scale);
        prop_assert!(s.xi_prime.last().abs() <= 1e-12 * s.xi_prime.max_abs().max(1e-300));
    }
}
