//! Reduced-size runs of every property suite.

use rwre::verify::*;

fn main() -> rwre::Result<()> {
    let reports = [
        barrier_suite(&BarrierSuiteConfig { trials: 400, ..Default::default() })?,
        loops_suite(&LoopSuiteConfig { max_len: 8, random_paths: 2000, ..Default::default() })?,
        uniforms_suite(&UniformSuiteConfig { walks: 20, steps: 2000, ..Default::default() })?,
        theta_suite(&ThetaSuiteConfig { walks: 100, ..Default::default() })?,
        assumptions_suite(&AssumptionSuiteConfig::default())?,
        mixing_suite(&MixingSuiteConfig { samples: 2000, ..Default::default() })?,
    ];
    for r in &reports {
        println!("[{}] {}", if r.passed { "PASS" } else { "FAIL" }, r.suite);
        for l in &r.lines {
            println!("    {l}");
        }
    }
    Ok(())
}
