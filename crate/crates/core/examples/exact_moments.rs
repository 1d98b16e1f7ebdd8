//! Exact limiting moment processes `m_k(t)` as exponential polynomials,
//! their bounds `Lambda_k`, and the Carleman partial sums.
//!
//! ```bash
//! cargo run --release --example exact_moments -- 1 1 6
//! ```

use beta_laguerre::exact::rational_from_f64;
use beta_laguerre::hierarchy::{carleman_diagnostic, conformance_grid, lambda_bounds, limiting_constants, ode_residual};
use beta_laguerre::solve_hierarchy;

fn main() -> beta_laguerre::Result<()> {
    let mut args = std::env::args().skip(1);
    let alpha: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let c: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let k_max: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(6);

    // Start from a point mass at 1, so a_k = 1.
    let ones = vec![rational_from_f64(1.0); k_max];
    let h = solve_hierarchy(&rational_from_f64(alpha), &rational_from_f64(c), &ones, k_max)?;
    for k in 1..=k_max {
        let m = h.moment(k);
        assert!(ode_residual(&h, k).is_zero());
        println!("m_{k}(t) = {m}");
        println!("    m_{k}(0) = {}, m_{k}(1) = {:.6}, limit {}", m.initial_value(), m.eval_f64(1.0), m.limit());
    }
    let u = limiting_constants(&h)?;
    println!("limits: {:?}", u.values().iter().map(|r| r.to_string()).collect::<Vec<_>>());

    let bounds = lambda_bounds(alpha, c, &vec![1.0; k_max], k_max.max(100));
    bounds.check_conformance(&h, &conformance_grid())?;
    for k in 1..=k_max.min(3) {
        println!("Lambda_{k} = {:.6}", bounds.value(k));
    }
    let sums = carleman_diagnostic(&bounds);
    println!("Carleman partial sum through k = {}: {:.3}", sums.len(), sums.last().unwrap());
    Ok(())
}
