//! Run the ensemble to a long horizon and compare window averages of the
//! empirical moments with the limit moments `u_k`, and the final empirical
//! CDF with a 400-node quadrature of the limit measure.
//!
//! ```bash
//! cargo run --release --example long_time -- 1000 15 1
//! ```

use beta_laguerre::experiment::{longtime_check, ExperimentSpec};

fn main() -> beta_laguerre::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(500);
    let t_long: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(15.0);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let mut spec = ExperimentSpec::reference(n)?;
    spec.seeds = vec![seed];
    spec.replicas = 1;
    let report = longtime_check(&spec, t_long)?;
    for r in &report.results {
        for (k, (avg, u)) in r.averages.iter().zip(&r.targets).enumerate() {
            println!("k = {}: window average {avg:.4}, limit {u}", k + 1);
        }
        println!("Kolmogorov distance to the limit quadrature: {:.4}", r.kolmogorov);
    }
    for c in &report.checks {
        println!(
            "{:<48} {:>10.5} {} {:<8} {}",
            c.label(),
            c.value,
            c.relation.symbol(),
            c.threshold,
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}
