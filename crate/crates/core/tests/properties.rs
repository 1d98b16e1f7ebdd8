//! Structural properties checked over random inputs.

use beta_laguerre::hierarchy::solve_hierarchy;
use beta_laguerre::model::{normalize_state, validate_params, EnsembleState};
use beta_laguerre::sde::drift_lambda;
use beta_laguerre::spectrum::{build_jacobi, self_convolutive_moments, stieltjes_resolvent};
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

fn state(raw: Vec<f64>) -> EnsembleState {
    normalize_state(raw, 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_idempotent(raw in prop::collection::vec(0.0f64..50.0, 1..40)) {
        let once = state(raw);
        let twice = state(once.lambdas().to_vec());
        prop_assert_eq!(once.lambdas(), twice.lambdas());
        prop_assert!(once.lambdas().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn coupling_fixes_beta_times_n(c in 0.01f64..10.0, n in 1usize..5000) {
        let p = validate_params(1.0, c, n).unwrap();
        prop_assert!((p.beta() * n as f64 - 2.0 * c).abs() <= 1e-12 * c);
    }

    #[test]
    fn drift_is_permutation_equivariant(raw in prop::collection::vec(0.0f64..20.0, 2..30), alpha in 1.0f64..4.0, c in 0.1f64..3.0) {
        // Distinct positions so the pair terms are unregularized.
        let mut spread: Vec<f64> = raw.iter().enumerate().map(|(i, x)| x + 0.37 * i as f64).collect();
        let n = spread.len();
        let params = validate_params(alpha, c, n).unwrap();
        let s = state(spread.clone());
        let d = drift_lambda(&s, &params, 1e-12);
        // Direct sum, in the original (unsorted) order.
        spread.reverse();
        for (i, &x) in spread.iter().enumerate() {
            let pair: f64 = spread.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &y)| 1.0 / (x - y)).sum();
            let want = alpha - x + params.beta() * x * pair;
            let k = s.lambdas().iter().position(|&v| v == x).unwrap();
            prop_assert!((d[k] - want).abs() <= 1e-9 * (1.0 + want.abs()), "{} vs {}", d[k], want);
        }
        // The pair terms sum to beta N (N - 1) / 2.
        let total: f64 = d.iter().sum();
        let want = n as f64 * alpha - spread.iter().sum::<f64>() + params.beta() * (n * (n - 1)) as f64 / 2.0;
        prop_assert!((total - want).abs() <= 1e-8 * (1.0 + want.abs()));
    }

    #[test]
    fn empirical_moments_are_supermultiplicative(raw in prop::collection::vec(0.0f64..5.0, 1..50), i in 0u32..5, j in 0u32..5) {
        let s = state(raw);
        let lhs = s.moment(i) * s.moment(j);
        prop_assert!(lhs <= s.moment(i + j) * (1.0 + 1e-12));
    }

    #[test]
    fn limit_moments_are_supermultiplicative(a in 1i64..20, cn in 1i64..20, i in 0usize..8, j in 0usize..8) {
        let alpha = rational(a + 4, 5);
        let c = rational(cn, 4);
        let u = self_convolutive_moments(&alpha, &c, 16);
        prop_assert!(&u.values()[i] * &u.values()[j] <= u.values()[i + j]);
    }

    #[test]
    fn hierarchy_starts_at_initial_moments(a in 1i64..12, cn in 1i64..12, at in 1i64..30) {
        let alpha = rational(a + 2, 3);
        let c = rational(cn, 2);
        // Point mass at at/7.
        let x = rational(at, 7);
        let moments: Vec<BigRational> = (1..=6).map(|k| (0..k).fold(rational(1, 1), |acc, _| acc * &x)).collect();
        let h = solve_hierarchy(&alpha, &c, &moments, 6).unwrap();
        let u = self_convolutive_moments(&alpha, &c, 6);
        for k in 1..=6 {
            prop_assert_eq!(h.moment(k).initial_value(), moments[k - 1].clone());
            prop_assert_eq!(h.moment(k).limit(), u.values()[k].clone());
        }
    }

    // Convergence in depth is slow close to the support, hence Im z >= 1.
    #[test]
    fn resolvent_truncations_settle(re in -5.0f64..20.0, im in 1.0f64..5.0) {
        let z = Complex64::new(re, im);
        let deep = stieltjes_resolvent(1.0, 1.0, z, 1600).unwrap();
        let errs: Vec<f64> = [25, 50, 100, 200, 400]
            .iter()
            .map(|&d| (stieltjes_resolvent(1.0, 1.0, z, d).unwrap() - deep).norm())
            .collect();
        prop_assert!(errs.last().unwrap() <= &(1e-6 * deep.norm()));
        prop_assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn jacobi_factors_through_a_bidiagonal(alpha in 1.0f64..6.0, c in 0.05f64..6.0, n in 1usize..12) {
        let j = build_jacobi(alpha, c, n).unwrap().to_dense();
        let mut l = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            l[(k, k)] = (alpha + c + k as f64).sqrt();
            if k + 1 < n {
                l[(k + 1, k)] = (c + k as f64 + 1.0).sqrt();
            }
        }
        let llt = &l * l.transpose();
        prop_assert!((j - llt).amax() <= 1e-12 * (alpha + c + 2.0 * n as f64));
    }
}
