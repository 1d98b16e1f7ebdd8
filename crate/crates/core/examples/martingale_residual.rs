//! Martingale residual `M_1(T)` of the first moment: its variance across
//! seeds should scale like `1/N`, and `N Var M_1(T)` should match the mean
//! quadratic variation `N <M_1>_T = 2 int_0^T S_1`.
//!
//! ```bash
//! cargo run --release --example martingale_residual
//! ```

use beta_laguerre::experiment::{martingale_scaling, VerificationPlan};

fn main() -> beta_laguerre::Result<()> {
    let plan = VerificationPlan::reference()?;
    let scaling = martingale_scaling(&plan.martingale, &plan.martingale_ns)?;
    println!("{:>6} {:>16} {:>16}", "N", "N Var M_1(T)", "N mean <M_1>_T");
    for (n, var, qv) in &scaling.scaled {
        println!("{n:>6} {var:>16.4} {qv:>16.4}");
    }
    for c in &scaling.checks {
        println!(
            "{}: {:.4} {} {} -> {}",
            c.label(),
            c.value,
            c.relation.symbol(),
            c.threshold,
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}
