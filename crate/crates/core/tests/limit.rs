//! Exact hierarchy against numerical integration, and moment inversion.

use beta_laguerre::hierarchy::{solve_hierarchy, solve_hierarchy_f64, MomentSequence};
use beta_laguerre::spectrum::{
    build_jacobi, interpolated_kolmogorov_distance, quadrature_from_jacobi, recurrence_from_exact_moments,
    recurrence_from_moments, self_convolutive_moments_f64,
};
use num_rational::BigRational;

/// Right-hand side of the closed moment system, written out from the generator.
fn rhs(alpha: f64, c: f64, m: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.len()];
    for k in 1..m.len() {
        let kf = k as f64;
        let conv: f64 = (0..k).map(|l| m[l] * m[k - 1 - l]).sum();
        out[k] = kf * (alpha + kf - 1.0) * m[k - 1] - kf * m[k] + c * kf * conv;
    }
    out
}

fn rk4(alpha: f64, c: f64, m0: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let h = t / steps as f64;
    let mut m = m0.to_vec();
    let axpy = |a: &[f64], s: f64, b: &[f64]| a.iter().zip(b).map(|(x, y)| x + s * y).collect::<Vec<_>>();
    for _ in 0..steps {
        let k1 = rhs(alpha, c, &m);
        let k2 = rhs(alpha, c, &axpy(&m, h / 2.0, &k1));
        let k3 = rhs(alpha, c, &axpy(&m, h / 2.0, &k2));
        let k4 = rhs(alpha, c, &axpy(&m, h, &k3));
        for i in 0..m.len() {
            m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    m
}

#[test]
fn exact_hierarchy_matches_runge_kutta() {
    for &(alpha, c, x0) in &[(1.0, 1.0, 1.0), (2.5, 0.5, 0.0), (1.5, 3.0, 2.0)] {
        let k_max = 6;
        let a: Vec<f64> = (1..=k_max).map(|k| f64::powi(x0, k as i32)).collect();
        let h = solve_hierarchy_f64(alpha, c, &a, k_max).unwrap();
        let mut m0 = vec![1.0];
        m0.extend(&a);
        for &t in &[0.25, 1.0, 3.0] {
            let num = rk4(alpha, c, &m0, t, 4000);
            for k in 1..=k_max {
                let exact = h.moment(k).eval_f64(t);
                assert!((num[k] - exact).abs() <= 1e-9 * exact.abs().max(1.0), "k={k} t={t}: {} vs {exact}", num[k]);
            }
        }
    }
}

#[test]
fn runge_kutta_confirms_corrected_constant() {
    let m = rk4(1.0, 1.0, &[1.0; 5], 40.0, 40_000);
    assert!((m[4] - 296.0).abs() < 1e-8);
}

#[test]
fn recurrence_round_trip_from_limit_moments() {
    for &(alpha, c) in &[(1.0, 1.0), (2.0, 0.5), (1.25, 4.0)] {
        for n in 1..=8 {
            let u = self_convolutive_moments_f64(alpha, c, 2 * n);
            let rec = recurrence_from_moments(&MomentSequence::new(u).unwrap()).unwrap();
            let j = build_jacobi(alpha, c, n).unwrap();
            let worst = j
                .diag()
                .iter()
                .zip(rec.jacobi.diag())
                .chain(j.offdiag().iter().zip(rec.jacobi.offdiag()))
                .map(|(a, b)| (a - b).abs() / a.abs())
                .fold(0.0, f64::max);
            assert!(worst <= 1e-6, "alpha={alpha} c={c} n={n}: rel err {worst:e}, lost {:.1} digits", rec.digits_lost);
        }
    }
}

#[test]
fn late_time_measure_approaches_limit_quadrature() {
    let one = BigRational::from_integer(1.into());
    let h = solve_hierarchy(&one, &one, &vec![one.clone(); 16], 16).unwrap();
    let exact = h.eval_all_rational(15.0, 256);
    let rec = recurrence_from_exact_moments(&exact, 256).unwrap();
    let recovered = quadrature_from_jacobi(&rec.jacobi, 8).unwrap();
    let limit = quadrature_from_jacobi(&build_jacobi(1.0, 1.0, 8).unwrap(), 8).unwrap();
    // Step CDFs with nodes a hair apart differ by a full weight, so compare
    // the interpolated CDFs.
    let ks = interpolated_kolmogorov_distance(&recovered, &limit);
    assert!(ks <= 0.02, "ks {ks}");
    let m1 = recovered.moment(1);
    assert!((m1 - 2.0).abs() < 1e-5);
}
