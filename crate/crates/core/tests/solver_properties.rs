mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use portfolio_rar::solver::{
    build_mrar_system, build_mv_system, closed_form_mrar, closed_form_mv, cramer_solve_4, optimize,
    solve_system, Method, SolveError,
};
use portfolio_rar::MomentEstimate;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn mv_block_collapses_to_twice_the_row_difference() {
    let mut rng = rng(11);
    for _ in 0..50 {
        let m = random_instance(&mut rng, 5);
        let s = m.covariance();
        let b = build_mv_system(&m).unwrap().block();
        for i in 0..4 {
            for j in 0..5 {
                let collapsed = 2.0 * (s[(i + 1, j)] - s[(i, j)]);
                assert!((b[(i, j)] - collapsed).abs() <= 1e-15 * s.amax().max(1.0));
            }
        }
    }
}

#[test]
fn mrar_block_matches_literal_formula() {
    let mut rng = rng(12);
    for _ in 0..50 {
        let m = random_instance(&mut rng, 4);
        let g = build_mrar_system(&m).unwrap();
        let (s, r) = (m.covariance(), m.means());
        for i in 0..3 {
            for j in 0..4 {
                let term_next = s[(i + 1, j)] + s[(j, i + 1)];
                let term_here = s[(i, j)] + s[(j, i)];
                let literal = r[i] * term_next - r[i + 1] * term_here;
                assert!((g.matrix()[(i, j)] - literal).abs() <= 1e-15);
            }
        }
        assert!(g.matrix().row(3).iter().all(|&v| v == 1.0));
        assert_eq!(g.rhs().as_slice(), [0.0, 0.0, 0.0, 1.0]);
    }
}

#[test]
fn residual_and_budget_for_n_2_to_12() {
    let mut rng = rng(13);
    for n in 2..=12 {
        for _ in 0..40 {
            let m = random_instance(&mut rng, n);
            for system in [build_mv_system(&m).unwrap(), build_mrar_system(&m).unwrap()] {
                let w = solve_system(&system).unwrap();
                let residual = system.matrix() * w.as_vector() - system.rhs();
                let norm = system.matrix().amax();
                assert!(
                    residual.amax() <= 1e-9 * norm,
                    "n={n} residual {}",
                    residual.amax()
                );
                assert!((w.sum() - 1.0).abs() <= 1e-10);
            }
            assert!((closed_form_mv(&m).unwrap().sum() - 1.0).abs() <= 1e-10);
            assert!((closed_form_mrar(&m).unwrap().sum() - 1.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn mrar_example_beats_random_search() {
    let m =
        MomentEstimate::unnamed(DVector::from_vec(vec![0.02, 0.01, 0.01]), DMatrix::identity(3, 3)).unwrap();
    let w = optimize(&m, Method::Mrar).unwrap();
    let expected = [0.5, 0.25, 0.25];
    assert!(max_abs_diff(w.weights.as_slice(), &expected) < 1e-14);
    let best = w.rar.unwrap();
    let mut rng = rng(14);
    for _ in 0..20_000 {
        let a: f64 = rng.gen_range(-3.0..3.0);
        let b: f64 = rng.gen_range(-3.0..3.0);
        let trial = DVector::from_vec(vec![a, b, 1.0 - a - b]);
        assert!(rar(&m, &trial) <= best + 1e-12);
    }
}

#[test]
fn cramer_matches_elimination_on_random_systems() {
    let mut rng = rng(15);
    for _ in 0..1000 {
        let m = random_instance(&mut rng, 4);
        for system in [build_mv_system(&m).unwrap(), build_mrar_system(&m).unwrap()] {
            let a = solve_system(&system).unwrap();
            let b = cramer_solve_4(&system).unwrap();
            assert!(max_abs_diff(a.as_slice(), b.as_slice()) <= 1e-9);
        }
    }
}

#[test]
fn duplicated_assets_are_singular_everywhere() {
    let mut rng = rng(16);
    for n in 3..=6 {
        let base = random_instance(&mut rng, n - 1);
        // append a copy of asset 1
        let mut positions: Vec<usize> = (0..n - 1).collect();
        positions.push(0);
        let m = base.select(&positions);
        let m = MomentEstimate::unnamed(m.means().clone(), m.covariance().clone()).unwrap();
        for method in Method::ALL {
            assert!(matches!(
                optimize(&m, method),
                Err(SolveError::SingularSystem { .. })
            ));
        }
        if n == 4 {
            assert!(matches!(
                cramer_solve_4(&build_mv_system(&m).unwrap()),
                Err(SolveError::SingularSystem { .. })
            ));
        }
    }
}

#[test]
fn spd_normalizer_is_positive() {
    let mut rng = rng(17);
    for n in 2..=8 {
        let m = random_instance(&mut rng, n);
        let chol = m.covariance().clone().cholesky().unwrap();
        let ones = DVector::from_element(n, 1.0);
        assert!(ones.dot(&chol.solve(&ones)) > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn first_order_conditions(seed in any::<u64>(), n in 2usize..9) {
        let m = random_instance(&mut rng(seed), n);
        let mv = optimize(&m, Method::Mv).unwrap();
        let marginal = m.covariance() * mv.weights.as_vector();
        let scale = marginal.amax();
        for v in marginal.iter() {
            prop_assert!((v - marginal[0]).abs() <= 1e-9 * scale);
        }
        let mrar = optimize(&m, Method::Mrar).unwrap();
        let marginal = m.covariance() * mrar.weights.as_vector();
        let ratios: Vec<f64> = marginal.iter().zip(m.means().iter()).map(|(a, r)| a / r).collect();
        for q in &ratios {
            prop_assert!((q - ratios[0]).abs() <= 1e-9 * ratios[0].abs());
        }
    }

    #[test]
    fn mv_is_variance_minimal(seed in any::<u64>(), n in 2usize..6) {
        let mut r = rng(seed);
        let m = random_instance(&mut r, n);
        let w = optimize(&m, Method::Mv).unwrap();
        let v0 = w.variance;
        for _ in 0..500 {
            let trial = w.weights.as_vector() + perturbation(&mut r, n, 0.5);
            prop_assert!(variance(&m, &trial) >= v0 - 1e-12);
        }
    }

    #[test]
    fn permutation_equivariance(seed in any::<u64>(), n in 2usize..9) {
        let mut r = rng(seed);
        let m = random_instance(&mut r, n);
        let perm = permutation(&mut r, n);
        let p = permute(&m, &perm);
        for method in Method::ALL {
            let a = optimize(&m, method).unwrap();
            let b = optimize(&p, method).unwrap();
            for (k, &src) in perm.iter().enumerate() {
                prop_assert!((b.weights.as_slice()[k] - a.weights.as_slice()[src]).abs() <= 1e-9);
            }
        }
    }
}
