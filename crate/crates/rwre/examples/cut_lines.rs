//! Cut-line levels and backtracking events on a drifting walk.

use rwre::coupling::{cut_line_estimate, event_e, run_until_height, UniformField, Walk};
use rwre::env::{EnvironmentSpec, Family, Window};
use rwre::kernel::TransitionKernel;
use rwre::Site;

fn main() -> rwre::Result<()> {
    let spec = EnvironmentSpec::new(
        Family::IidSite { weights: vec![0.9, 0.1] },
        vec![TransitionKernel::new([0.0, 0.0, 0.6, 0.4])?, TransitionKernel::new([0.05, 0.05, 0.6, 0.3])?],
        0,
    )?;
    for s in 0..8u64 {
        let env = spec.with_seed(s).build(Window::unbounded())?;
        let u = UniformField::new(100 + s);
        let mut w = Walk::new(Site::ORIGIN);
        let run = run_until_height(&mut w, &env, &u, 44, 0, 1_000_000)?;
        let cut = cut_line_estimate(&run.path, 12);
        println!(
            "sample {s}: cut level {:?} (first reached at step {:?}), E_4 {}, E_8 {}",
            cut.level,
            cut.step,
            event_e(&run.path, 4),
            event_e(&run.path, 8)
        );
    }
    Ok(())
}
