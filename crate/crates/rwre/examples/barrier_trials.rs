//! Barrier trichotomy over random draws, with and without a corrupted
//! coupling.

use rwre::coupling::CouplingFault;
use rwre::verify::{barrier_families, barrier_run, BarrierSuiteConfig};

fn main() -> rwre::Result<()> {
    let families = barrier_families();
    for fault in [None, Some(CouplingFault::SkipFirstIncrement)] {
        let cfg = BarrierSuiteConfig { trials: 1000, fault, ..Default::default() };
        let res = barrier_run(&families, &cfg)?;
        println!("fault {fault:?}: {:?}, {} redrawn", res.total, res.redrawn);
        if let Some(t) = res.trials.iter().find(|t| t.verdict.scenario == rwre::path_algebra::Scenario::Violation) {
            println!("  first violation: {}", serde_json::to_string(t).unwrap());
        }
    }
    Ok(())
}
