//! Trap and threat verdicts at a few reference points.

use rwre::coupling::UniformField;
use rwre::env::{EnvironmentSpec, Family, Window};
use rwre::estimators::{threat_scan, trap_scan, RenormParams};
use rwre::geometry::{q, qi, RefPoint, ScaleSchedule};
use rwre::kernel::TransitionKernel;

fn main() -> rwre::Result<()> {
    let spec = EnvironmentSpec::new(
        Family::IidSite { weights: vec![0.5, 0.5] },
        vec![TransitionKernel::new([0.3, 0.1, 0.4, 0.2])?, TransitionKernel::new([0.1, 0.3, 0.4, 0.2])?],
        21,
    )?;
    let env = spec.build(Window::unbounded())?;
    let u = UniformField::new(22);
    let params = RenormParams::new(qi(5), q(-1, 4), q(1, 4), 4, ScaleSchedule::from_u64(100, 3)?)?.with_delta(q(1, 4))?;
    for x in [0, 30, 60] {
        let w = RefPoint::new(qi(x), 0);
        let t = trap_scan(&env, &u, w, 64, &params, 100_000)?;
        println!(
            "w = ({x}, 0): trapped {:?}, witness {:?}, band {:?}, rows read {:?}",
            t.verdict, t.witness, t.band, t.read_band
        );
        let th = threat_scan(&env, &u, w, 32, 4, &params, 100_000)?;
        let by_r: Vec<_> = (1..=4).map(|r| th.verdict_at(r)).collect();
        println!("  threatened for r = 1..4: {by_r:?}");
    }
    Ok(())
}
