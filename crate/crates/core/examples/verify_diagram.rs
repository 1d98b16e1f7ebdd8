//! Finite-N check of moment convergence: run the reference experiment
//! (`alpha = c = 1`, point mass at 1, `T = 3`, 20 seeds) at one particle
//! count and print every declared check.
//!
//! ```bash
//! cargo run --release --example verify_diagram -- 1000
//! ```

use beta_laguerre::experiment::{run_experiment, ExperimentSpec};

fn main() -> beta_laguerre::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(250);
    let spec = ExperimentSpec::reference(n)?;
    let report = run_experiment(&spec)?;

    println!("run {} (N = {n})", spec.run_id());
    println!("Lambda_k = {:?}, Carleman sum = {:.3}", report.bounds, report.carleman_sum);
    if let Some(r) = &report.reference {
        println!("reference measure at t = {}: {} nodes, {:.1} digits lost", r.time, r.nodes.len(), r.digits_lost);
    }
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "seed", "k=1", "k=2", "k=3", "KS");
    for r in report.completed() {
        println!(
            "{:>6} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            r.seed,
            r.sup_errors[0],
            r.sup_errors[1],
            r.sup_errors[2],
            r.kolmogorov.unwrap_or(f64::NAN)
        );
    }
    for k in 1..=spec.k_max {
        println!("median sup error k = {k}: {:.4}", report.median_sup_error(k));
    }
    for c in &report.checks {
        println!(
            "{:<40} {:>10.4} {} {:<8} {}",
            c.label(),
            c.value,
            c.relation.symbol(),
            c.threshold,
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    for a in &report.anomalies {
        println!("anomaly: {a}");
    }
    Ok(())
}
