//! Threatened density along one walk, with the simulated threat oracle and
//! with a hand-written one.

use rwre::coupling::UniformField;
use rwre::env::{EnvironmentSpec, Family, Window};
use rwre::estimators::{rho_sequence, threatened_density, RenormParams, ScanOracle, Truth};
use rwre::geometry::{q, qi, RefPoint, ScaleSchedule};
use rwre::kernel::TransitionKernel;
use rwre::Site;

fn main() -> rwre::Result<()> {
    let schedule = ScaleSchedule::from_u64(100, 3)?;
    let spec = EnvironmentSpec::new(
        Family::IidSite { weights: vec![0.5, 0.5] },
        vec![TransitionKernel::new([0.3, 0.1, 0.4, 0.2])?, TransitionKernel::new([0.1, 0.3, 0.4, 0.2])?],
        4,
    )?;
    let env = spec.build(Window::unbounded())?;
    let u = UniformField::new(5);
    let r = schedule.small_l(0)? as u32;
    let params = RenormParams::new(qi(5), q(-1, 4), q(1, 4), r, schedule.clone())?.with_delta(q(1, 4))?;
    let oracle = ScanOracle { env: &env, u: &u, h: schedule.big_l(0)? as i64, r, params: &params, cap: 100_000 };
    let w = RefPoint::origin();
    let rep = threatened_density(&env, &u, Site::ORIGIN, w, 1, 2, 0, &schedule, params.delta, &oracle, 200_000)?;
    println!("simulated oracle: density {} ({} unknown of {})", rep.density, rep.unknown, rep.total);

    let every_other = |p: RefPoint| Truth::from_bool(p.y % 200 == 0);
    let rep = threatened_density(&env, &u, Site::ORIGIN, w, 1, 2, 0, &schedule, params.delta, &every_other, 200_000)?;
    println!("injected oracle: density {}", rep.density);

    let rho = rho_sequence(&ScaleSchedule::from_u64(10_000_000_000, 3)?, 0, 3)?;
    let shown: Vec<String> = rho.values.iter().map(|v| v.to_string()).collect();
    println!("rho: {shown:?}, stays above 1/2: {}", rho.stays_above_half);
    Ok(())
}
