//! The limit measure `nu_{alpha,c}` through its Jacobi operator: Gauss
//! quadratures of growing size, a smoothed density, and the Stieltjes
//! transform against the quadrature sum.
//!
//! ```bash
//! cargo run --release --example limit_measure -- 1 1
//! ```

use beta_laguerre::spectrum::{build_jacobi, quadrature_from_jacobi, stieltjes_resolvent};
use num_complex::Complex64;

fn main() -> beta_laguerre::Result<()> {
    let mut args = std::env::args().skip(1);
    let alpha: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let c: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1.0);

    let j = build_jacobi(alpha, c, 400)?;
    for n in [4, 16, 64] {
        let q = quadrature_from_jacobi(&j, n)?;
        let (mean, sd) = q.mean_and_std();
        println!(
            "n = {n:>3}: nodes in [{:.4}, {:.2}], mean {mean:.6}, sd {sd:.6}",
            q.nodes()[0],
            q.nodes()[n - 1]
        );
    }

    let q = quadrature_from_jacobi(&j, 400)?;
    println!("smoothed density of the 400-node quadrature:");
    for i in 0..=12 {
        let x = i as f64;
        let d = q.smoothed_density(x, None);
        println!("  x = {x:>4.1}  {d:.5}  {}", "#".repeat((d * 200.0).round() as usize));
    }

    println!("Stieltjes transform, continued fraction vs 400-node quadrature:");
    for z in [Complex64::new(1.0, 1.0), Complex64::new(5.0, 0.5), Complex64::new(-2.0, 3.0)] {
        let g = stieltjes_resolvent(alpha, c, z, 400)?;
        let s = q.stieltjes(z);
        println!("  z = {z}: {g:.8}  {s:.8}");
    }
    Ok(())
}
