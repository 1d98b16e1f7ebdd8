//! Simulate one path of the particle system from a point mass and compare
//! the empirical moments with the exact limiting moment processes.
//!
//! ```bash
//! cargo run --release --example simulate_ensemble -- 1000 3.0 7
//! ```

use std::time::Instant;

use beta_laguerre::hierarchy::solve_hierarchy_f64;
use beta_laguerre::model::{uniform_grid, validate_params, InitialCondition};
use beta_laguerre::sde::{simulate_path, SchemeConfig};

fn main() -> beta_laguerre::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(500);
    let t_max: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3.0);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let params = validate_params(1.0, 1.0, n)?;
    let k_max = 3;
    let init = InitialCondition::point_mass(1.0, k_max);
    let grid = uniform_grid(t_max, (t_max * 20.0).round() as usize);
    let config = SchemeConfig { seed, ..Default::default() };

    let started = Instant::now();
    let path = simulate_path(&params, &init, &grid, &config, k_max, false)?;
    let elapsed = started.elapsed();

    let exact = solve_hierarchy_f64(1.0, 1.0, &[1.0; 3], k_max)?;
    println!("N = {n}, T = {t_max}, seed = {seed}: {elapsed:.2?}, {:?}", path.stats);
    println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "t", "S1", "m1", "S2", "m2", "S3", "m3");
    for (j, &t) in grid.iter().enumerate().step_by(10) {
        let m = exact.eval_all(t);
        println!(
            "{t:6.2} {:10.4} {:10.4} {:10.4} {:10.4} {:10.3} {:10.3}",
            path.trace.values[1][j], m[1], path.trace.values[2][j], m[2], path.trace.values[3][j], m[3]
        );
    }
    for k in 1..=k_max {
        let sup = grid
            .iter()
            .enumerate()
            .map(|(j, &t)| (path.trace.values[k][j] - exact.eval_all(t)[k]).abs())
            .fold(0.0, f64::max);
        println!("sup_t |S_{k} - m_{k}| = {sup:.4}");
    }
    Ok(())
}
