use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EnvironmentSpec, KernelField, Window};
use crate::error::{Error, Result};
use crate::geometry::{BoxPair, RealBox};
use crate::kernel::KERNEL_TOLERANCE;
use crate::rng;
use crate::Site;

/// Read access to a field restricted to one box.
pub struct BoxView<'a> {
    field: &'a dyn KernelField,
    bx: RealBox,
}

impl<'a> BoxView<'a> {
    pub fn new(field: &'a dyn KernelField, bx: RealBox) -> Self {
        BoxView { field, bx }
    }

    pub fn state(&self, x: Site) -> Result<u8> {
        if !self.bx.contains(x) {
            return Err(Error::InvalidGeometry(format!("statistic read ({}, {}) outside its box", x.x, x.y)));
        }
        self.field.state(x)
    }

    pub fn sites(&self) -> Vec<Site> {
        self.bx.sites()
    }

    /// Lower-left lattice point of the box.
    pub fn corner(&self) -> Site {
        Site::new(self.bx.a1.ceil() as i64, self.bx.a2.ceil() as i64)
    }
}

/// Built-in `{0,1}`-valued box statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stat", rename_all = "snake_case")]
pub enum BoxStatistic {
    Constant { value: bool },
    /// state at the box corner shifted by `(dx, dy)` equals `state`
    SiteIs { dx: i64, dy: i64, state: u8 },
    AllIs { state: u8 },
    AnyIs { state: u8 },
    CountAtLeast { state: u8, count: usize },
}

impl BoxStatistic {
    pub fn eval(&self, view: &BoxView) -> Result<bool> {
        Ok(match *self {
            BoxStatistic::Constant { value } => value,
            BoxStatistic::SiteIs { dx, dy, state } => {
                let c = view.corner();
                view.state(Site::new(c.x + dx, c.y + dy))? == state
            }
            BoxStatistic::AllIs { state } => {
                for s in view.sites() {
                    if view.state(s)? != state {
                        return Ok(false);
                    }
                }
                true
            }
            BoxStatistic::AnyIs { state } => {
                for s in view.sites() {
                    if view.state(s)? == state {
                        return Ok(true);
                    }
                }
                false
            }
            BoxStatistic::CountAtLeast { state, count } => {
                let mut c = 0;
                for s in view.sites() {
                    c += usize::from(view.state(s)? == state);
                }
                c >= count
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingEstimate {
    pub cov: f64,
    pub std_error: f64,
    pub mean_f1: f64,
    pub mean_f2: f64,
    pub n: usize,
    pub sep: f64,
}

/// Covariance of two box statistics over `n` independently seeded fields,
/// with a jackknife standard error.
pub fn empirical_mixing_covariance(
    spec: &EnvironmentSpec,
    pair: &BoxPair,
    f1: &BoxStatistic,
    f2: &BoxStatistic,
    n: usize,
    seed: u64,
) -> Result<MixingEstimate> {
    let s = pair.sep();
    if s < 1.0 {
        return Err(Error::InvalidGeometry(format!("boxes are separated by {s} < 1")));
    }
    if n < 100 {
        return Err(Error::InvalidParameter(format!("n = {n} is below 100")));
    }
    let window = Window::covering(&pair.b).union(&Window::covering(&pair.b_prime));
    let draws: Vec<(bool, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let field = spec.with_seed(rng::derive_seed(seed, &[i as i64])).build(window.clone())?;
            let a = f1.eval(&BoxView::new(&field, pair.b))?;
            let b = f2.eval(&BoxView::new(&field, pair.b_prime))?;
            Ok((a, b))
        })
        .collect::<Result<_>>()?;
    let (x, y): (Vec<f64>, Vec<f64>) = draws.iter().map(|&(a, b)| (f64::from(u8::from(a)), f64::from(u8::from(b)))).unzip();
    let nf = n as f64;
    let s1: f64 = x.iter().sum();
    let s2: f64 = y.iter().sum();
    let s12: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    let cov = s12 / nf - (s1 / nf) * (s2 / nf);
    let m = nf - 1.0;
    let loo: Vec<f64> = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (s12 - a * b) / m - ((s1 - a) / m) * ((s2 - b) / m))
        .collect();
    let mean_loo = loo.iter().sum::<f64>() / nf;
    let std_error = (m / nf * loo.iter().map(|t| (t - mean_loo).powi(2)).sum::<f64>()).sqrt();
    Ok(MixingEstimate { cov, std_error, mean_f1: s1 / nf, mean_f2: s2 / nf, n, sep: s })
}

/// Whether every site of `region` steps north with probability at least
/// `1/2 + zeta`.
pub fn drift_condition_check<E, I>(env: &E, zeta: f64, region: I) -> Result<bool>
where
    E: KernelField + ?Sized,
    I: IntoIterator<Item = Site>,
{
    if !(zeta > 0.0 && zeta <= 0.5) {
        return Err(Error::InvalidParameter(format!("zeta = {zeta} must lie in (0, 1/2]")));
    }
    for s in region {
        if env.kernel(s)?.north() < 0.5 + zeta - KERNEL_TOLERANCE {
            return Ok(false);
        }
    }
    Ok(true)
}
