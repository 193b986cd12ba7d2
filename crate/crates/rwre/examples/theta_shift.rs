//! Stopping a walk at tau_H and restarting it from the shifted state gives
//! the same future.

use rwre::coupling::{run_until_height, theta_shift, History, UniformField, Walk};
use rwre::env::{EnvironmentSpec, Family, Window};
use rwre::kernel::TransitionKernel;
use rwre::Site;

fn main() -> rwre::Result<()> {
    let spec = EnvironmentSpec::new(
        Family::IidSite { weights: vec![0.5, 0.5] },
        vec![TransitionKernel::UNIFORM, TransitionKernel::new([0.4, 0.1, 0.3, 0.2])?],
        9,
    )?;
    let env = spec.build(Window::unbounded())?;
    let u = UniformField::new(10);
    let mut gamma = History::new();
    gamma.add(Site::new(0, -1), 2);
    let mut walk = Walk::with_history(Site::ORIGIN, gamma);
    let run = run_until_height(&mut walk, &env, &u, 6, 0, 100_000)?;
    let mut shifted = theta_shift(&walk, &run)?;
    println!("tau = {:?}, shifted start {:?}, history size {}", run.tau, shifted.start(), shifted.history().len());
    let a = walk.run(&env, &u, 50)?;
    let b = shifted.run(&env, &u, 50)?;
    println!("next 50 steps identical: {}", a.sites == b.sites);
    Ok(())
}
