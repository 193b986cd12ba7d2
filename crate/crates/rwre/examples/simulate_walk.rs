//! One coupled walk in an i.i.d. two-state environment, printed as JSONL.

use rwre::coupling::{run_until_height, UniformField, Walk};
use rwre::env::{EnvironmentSpec, Family, Window};
use rwre::kernel::TransitionKernel;
use rwre::Site;

fn main() -> rwre::Result<()> {
    let spec = EnvironmentSpec::new(
        Family::IidSite { weights: vec![0.5, 0.5] },
        vec![TransitionKernel::new([0.3, 0.1, 0.4, 0.2])?, TransitionKernel::new([0.1, 0.3, 0.4, 0.2])?],
        42,
    )?;
    let env = spec.build(Window::unbounded())?;
    let u = UniformField::new(7);
    let mut walk = Walk::new(Site::ORIGIN);
    let run = run_until_height(&mut walk, &env, &u, 10, 0, 10_000)?;
    print!("{}", run.path.to_jsonl());
    eprintln!("tau_10 = {:?}, end = {:?}", run.tau, walk.position());
    Ok(())
}
