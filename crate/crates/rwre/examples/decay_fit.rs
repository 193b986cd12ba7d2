//! Power-law fit of `p_H(v+ + eps)` across H, compared with `-alpha/4`.

use rwre::env::{EnvironmentSpec, Family, FactorRule};
use rwre::estimators::{deviation_fit, estimate_v_pm, slope_grid, Slope, StartSet, VpmConfig};
use rwre::kernel::TransitionKernel;

fn main() -> rwre::Result<()> {
    let spec = EnvironmentSpec::new(
        Family::FactorIid { radius: 1, rule: FactorRule::ThresholdMean { threshold: 0.5 } },
        vec![TransitionKernel::new([0.35, 0.05, 0.45, 0.15])?, TransitionKernel::new([0.05, 0.35, 0.45, 0.15])?],
        0,
    )?;
    let cfg = VpmConfig {
        h_list: vec![8, 16, 32, 64],
        v_grid: slope_grid(Slope::new(-1, 1), Slope::new(1, 1), Slope::new(1, 16))?,
        theta: 0.1,
        samples: 500,
        cap: 200_000,
        start: StartSet::Box,
        seed: 3,
    };
    let est = estimate_v_pm(&spec, &cfg)?;
    println!("v- = {}, v+ = {}", est.v_minus, est.v_plus);
    let fit = deviation_fit(&est.stats, est.v_plus, Slope::new(1, 8), Some(4.0))?;
    println!("slope {:?} (95% CI {:?}), benchmark {:?}, degenerate {}", fit.slope, fit.slope_ci, fit.benchmark, fit.degenerate_zero);
    Ok(())
}
