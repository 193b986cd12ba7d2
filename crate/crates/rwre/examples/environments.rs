//! A small snapshot of every environment family, drawn as text.

use rwre::env::{EnvironmentSpec, Family, FactorRule, KernelField, QTable, RadiusLaw, RowLaw, Window};
use rwre::kernel::TransitionKernel;
use rwre::Site;

fn main() -> rwre::Result<()> {
    let k = vec![TransitionKernel::new([0.3, 0.1, 0.4, 0.2])?, TransitionKernel::new([0.1, 0.3, 0.4, 0.2])?];
    let families = vec![
        Family::IidSite { weights: vec![0.7, 0.3] },
        Family::BooleanPercolation {
            intensity: 0.08,
            radius: RadiusLaw::Pareto { scale: 1.0, exponent: 6.0 },
            alpha: 3.0,
            radius_shift: 0.0,
        },
        Family::GaussianSign { q: QTable::uniform_ball(3), decay: 0.0 },
        Family::FactorIid { radius: 2, rule: FactorRule::ThresholdMean { threshold: 0.5 } },
        Family::Dynamic1d { law: RowLaw::Markov { p: 0.5, refresh: 0.2 } },
    ];
    let window = Window::new(0..48, 0..12);
    for family in families {
        let spec = EnvironmentSpec::new(family, k.clone(), 3)?;
        let env = spec.build(window.clone())?;
        println!("{}:", spec.family.name());
        for y in window.y.clone().rev() {
            let row: String = window
                .x
                .clone()
                .map(|x| if env.state(Site::new(x, y)).unwrap() == 1 { '#' } else { '.' })
                .collect();
            println!("  {row}");
        }
    }
    Ok(())
}
