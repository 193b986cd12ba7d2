//! Box covariances of a Gaussian sign field and an i.i.d. field.

use rwre::env::{empirical_mixing_covariance, BoxStatistic, EnvironmentSpec, Family, QTable};
use rwre::kernel::TransitionKernel;
use rwre::verify::site_pair;

fn main() -> rwre::Result<()> {
    let k = vec![TransitionKernel::new([0.3, 0.1, 0.4, 0.2])?, TransitionKernel::new([0.1, 0.3, 0.4, 0.2])?];
    let plus = BoxStatistic::SiteIs { dx: 0, dy: 0, state: 1 };
    let specs = [
        EnvironmentSpec::new(Family::GaussianSign { q: QTable::uniform_ball(6), decay: 0.0 }, k.clone(), 0)?,
        EnvironmentSpec::new(Family::IidSite { weights: vec![0.5, 0.5] }, k, 0)?,
    ];
    for spec in &specs {
        for h in [1, 2, 4, 8, 16] {
            let e = empirical_mixing_covariance(spec, &site_pair(h), &plus, &plus, 4000, 99)?;
            println!("{} sep {h:>2}: cov {:+.4} (se {:.4})", spec.family.name(), e.cov, e.std_error);
        }
    }
    Ok(())
}
