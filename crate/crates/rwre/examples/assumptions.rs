//! Empirical cut-line and backtracking tails under the drift condition.

use rwre::verify::{assumptions_run, drift_spec, AssumptionSuiteConfig};

fn main() -> rwre::Result<()> {
    let cfg = AssumptionSuiteConfig { samples: 4000, ..Default::default() };
    let r = assumptions_run(&drift_spec(), &cfg)?;
    println!("drift condition holds: {}, margin {}", r.drift_ok, r.margin);
    for row in &r.rows {
        println!("H = {:>2}: #(Xi >= H) = {:>4}, #(not E_H) = {:>4}", row.h, row.xi_at_least, row.not_e);
    }
    println!("log slope {:.3}", r.xi_log_slope);
    Ok(())
}
