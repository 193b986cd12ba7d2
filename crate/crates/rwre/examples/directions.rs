//! Exceedance curves and limiting directions in a constant environment
//! whose exact drift direction is 1/2.

use rwre::env::EnvironmentSpec;
use rwre::estimators::{estimate_v_pm, slope_grid, Slope, StartSet, VpmConfig};
use rwre::kernel::TransitionKernel;

fn main() -> rwre::Result<()> {
    let spec = EnvironmentSpec::constant(TransitionKernel::new([0.3, 0.1, 0.5, 0.1])?);
    let cfg = VpmConfig {
        h_list: vec![16, 64, 256],
        v_grid: slope_grid(Slope::new(-1, 1), Slope::new(3, 2), Slope::new(1, 20))?,
        theta: 0.1,
        samples: 2000,
        cap: 100_000,
        start: StartSet::Origin,
        seed: 1,
    };
    let est = estimate_v_pm(&spec, &cfg)?;
    for c in &est.crossings {
        println!("H = {:>3}: v- {:?}, v+ {:?}, mean {:.4} +- {:.4}", c.h, c.v_minus_exact, c.v_plus_exact, c.mean_v, c.mean_v_se);
    }
    println!("v- = {}, v+ = {}, mean direction {:.4} +- {:.4}", est.v_minus, est.v_plus, est.v_mean, est.v_mean_se);
    Ok(())
}
