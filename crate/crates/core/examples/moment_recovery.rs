//! Recover the measure `mu_t` from its exact moments `m_0..m_{2n}(t)` with
//! the Chebyshev algorithm, and watch it approach the limit quadrature.
//!
//! ```bash
//! cargo run --release --example moment_recovery -- 8
//! ```

use beta_laguerre::exact::rational_from_f64;
use beta_laguerre::solve_hierarchy;
use beta_laguerre::spectrum::{
    build_jacobi, interpolated_kolmogorov_distance, quadrature_from_jacobi, recurrence_from_exact_moments,
};

fn main() -> beta_laguerre::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let one = rational_from_f64(1.0);
    let h = solve_hierarchy(&one, &one, &vec![one.clone(); 2 * n], 2 * n)?;
    let limit = quadrature_from_jacobi(&build_jacobi(1.0, 1.0, n)?, n)?;

    for t in [0.1, 0.5, 1.0, 2.0, 5.0, 15.0] {
        let m = h.eval_all_rational(t, 256);
        let rec = recurrence_from_exact_moments(&m, 256)?;
        let q = quadrature_from_jacobi(&rec.jacobi, n)?;
        println!(
            "t = {t:>4}: {:.1} digits lost, largest node {:>8.3}, distance to limit {:.4}",
            rec.digits_lost,
            q.nodes()[n - 1],
            interpolated_kolmogorov_distance(&q, &limit)
        );
    }
    Ok(())
}
