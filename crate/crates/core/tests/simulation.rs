//! Finite-N simulation against quantities known in closed form.

use beta_laguerre::model::{uniform_grid, validate_params, InitialCondition, InitialDistribution};
use beta_laguerre::sde::{simulate_path, simulate_replicas, Scheme, SchemeConfig};

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn final_moment(outputs: Vec<beta_laguerre::Result<beta_laguerre::sde::PathOutput>>, k: usize) -> Vec<f64> {
    outputs.into_iter().map(|o| *o.unwrap().trace.order(k).unwrap().last().unwrap()).collect()
}

// Summing the drift over particles closes the first moment at every N:
// E S_1(t) = a + (S_1(0) - a) e^{-t} with a = alpha + c (N - 1) / N.
#[test]
fn first_moment_mean_is_exact_at_finite_n() {
    let (alpha, c, n) = (1.5, 0.75, 40);
    let params = validate_params(alpha, c, n).unwrap();
    let init = InitialCondition::from_distribution(InitialDistribution::Uniform { lo: 0.0, hi: 4.0 }, 2);
    let grid = uniform_grid(1.0, 4);
    let seeds: Vec<u64> = (1..=64).collect();
    for scheme in [Scheme::DirectLambda, Scheme::RadialSquare] {
        let config = SchemeConfig { dt: 1e-3, scheme, ..Default::default() };
        let s1 = final_moment(simulate_replicas(&params, &init, &grid, &config, 1, false, &seeds), 1);
        let (mean, se) = mean_and_se(&s1);
        let a = alpha + c * (n - 1) as f64 / n as f64;
        let want = a + (2.0 - a) * (-1.0f64).exp();
        assert!((mean - want).abs() <= 4.0 * se + 2e-3, "{scheme:?}: {mean} vs {want} (se {se})");
    }
}

#[test]
fn single_particle_relaxes_to_alpha() {
    let alpha = 2.0;
    let params = validate_params(alpha, 1.0, 1).unwrap();
    let init = InitialCondition::ExplicitLambdas(vec![6.0]);
    let grid = uniform_grid(6.0, 6);
    let seeds: Vec<u64> = (1..=400).collect();
    let config = SchemeConfig { dt: 2e-3, ..Default::default() };
    let s1 = final_moment(simulate_replicas(&params, &init, &grid, &config, 1, false, &seeds), 1);
    let (mean, se) = mean_and_se(&s1);
    let want = alpha + (6.0 - alpha) * (-6.0f64).exp();
    assert!((mean - want).abs() <= 4.0 * se, "{mean} vs {want} (se {se})");
}

// Both schemes consume the same Gaussian increments, so their paths
// converge to each other as the step shrinks.
#[test]
fn radial_and_direct_schemes_converge_pathwise() {
    let params = validate_params(1.0, 1.0, 50).unwrap();
    let init = InitialCondition::from_distribution(InitialDistribution::Uniform { lo: 0.5, hi: 2.5 }, 3);
    let grid = uniform_grid(1.0, 10);
    let gaps = |dt: f64| {
        let mut worst = [0.0f64; 3];
        for seed in 1..=2 {
            let run = |scheme| {
                let config = SchemeConfig { dt, scheme, seed, ..Default::default() };
                simulate_path(&params, &init, &grid, &config, 3, false).unwrap().trace
            };
            let (d, r) = (run(Scheme::DirectLambda), run(Scheme::RadialSquare));
            for k in 1..=3 {
                let gap = d.order(k).unwrap().iter().zip(r.order(k).unwrap()).map(|(a, b)| (a - b).abs() / a).fold(0.0, f64::max);
                worst[k - 1] = worst[k - 1].max(gap);
            }
        }
        worst
    };
    let (coarse, fine) = (gaps(1e-3), gaps(1e-5));
    for k in 0..3 {
        assert!(fine[k] < 0.02 && fine[k] < coarse[k] / 4.0, "k={}: {coarse:?} -> {fine:?}", k + 1);
    }
}

#[test]
fn step_refinements_agree_within_sampling_error() {
    let params = validate_params(1.0, 1.0, 50).unwrap();
    let init = InitialCondition::point_mass(1.0, 2);
    let grid = uniform_grid(1.0, 2);
    let seeds: Vec<u64> = (1..=48).collect();
    let means: Vec<(f64, f64)> = [8e-3, 4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| {
            let config = SchemeConfig { dt, ..Default::default() };
            mean_and_se(&final_moment(simulate_replicas(&params, &init, &grid, &config, 2, false, &seeds), 2))
        })
        .collect();
    for w in means.windows(2) {
        let (a, sa) = w[0];
        let (b, sb) = w[1];
        assert!((a - b).abs() <= 4.0 * (sa * sa + sb * sb).sqrt(), "{means:?}");
    }
}

#[test]
fn identical_seeds_reproduce_paths_bit_for_bit() {
    let params = validate_params(1.0, 1.0, 30).unwrap();
    let init = InitialCondition::point_mass(1.0, 2);
    let grid = uniform_grid(0.5, 5);
    let config = SchemeConfig { seed: 9, ..Default::default() };
    let a = simulate_path(&params, &init, &grid, &config, 2, true).unwrap();
    let b = simulate_path(&params, &init, &grid, &config, 2, true).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.final_state(), b.final_state());
}
