//! Random environments on Z^2 and their transition kernels.

mod boolean;
mod gaussian;
mod mixing;

use std::fmt::Write as _;
use std::ops::Range;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{TransitionKernel, KERNEL_TOLERANCE};
use crate::rng::{self, Tag};
use crate::Site;

pub use boolean::{Ball, BallProcess, RadiusLaw};
pub use gaussian::QTable;
pub use mixing::{drift_condition_check, empirical_mixing_covariance, BoxStatistic, BoxView, MixingEstimate};

/// Largest materialized window, in sites.
pub const MAX_MATERIALIZED_SITES: u64 = 50_000_000;

/// Anything that assigns a jump law to lattice sites.
pub trait KernelField: Sync {
    fn state(&self, x: Site) -> Result<u8>;
    fn kernel(&self, x: Site) -> Result<TransitionKernel>;
}

impl<T: KernelField + ?Sized> KernelField for &T {
    fn state(&self, x: Site) -> Result<u8> {
        (**self).state(x)
    }
    fn kernel(&self, x: Site) -> Result<TransitionKernel> {
        (**self).kernel(x)
    }
}

/// `kernel_of(env, x)`.
pub fn kernel_of<E: KernelField + ?Sized>(env: &E, x: Site) -> Result<TransitionKernel> {
    env.kernel(x)
}

/// Integer rectangle `x in [x.start, x.end), y in [y.start, y.end)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub x: Range<i64>,
    pub y: Range<i64>,
}

impl Window {
    pub fn new(x: Range<i64>, y: Range<i64>) -> Self {
        Window { x, y }
    }

    pub fn unbounded() -> Self {
        Window { x: i64::MIN / 4..i64::MAX / 4, y: i64::MIN / 4..i64::MAX / 4 }
    }

    /// Square of half-width `r` around `c`.
    pub fn around(c: Site, r: i64) -> Self {
        Window { x: c.x - r..c.x + r + 1, y: c.y - r..c.y + r + 1 }
    }

    pub fn contains(&self, s: Site) -> bool {
        self.x.contains(&s.x) && self.y.contains(&s.y)
    }

    pub fn is_unbounded(&self) -> bool {
        *self == Window::unbounded()
    }

    pub fn area(&self) -> u64 {
        let w = (self.x.end - self.x.start).max(0) as u64;
        let h = (self.y.end - self.y.start).max(0) as u64;
        w.saturating_mul(h)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.y.clone().flat_map(move |y| self.x.clone().map(move |x| Site::new(x, y)))
    }

    /// Smallest window containing every lattice point of `b`.
    pub fn covering(b: &crate::geometry::RealBox) -> Self {
        Window { x: b.a1.ceil() as i64..b.b1.ceil() as i64, y: b.a2.ceil() as i64..b.b2.ceil() as i64 }
    }

    pub fn union(&self, other: &Window) -> Window {
        Window {
            x: self.x.start.min(other.x.start)..self.x.end.max(other.x.end),
            y: self.y.start.min(other.y.start)..self.y.end.max(other.y.end),
        }
    }
}

/// Local rule of a factor of an i.i.d. uniform field `Y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum FactorRule {
    /// `1{mean of Y over the ball >= threshold}`
    ThresholdMean { threshold: f64 },
    /// parity of `#{y in ball : Y_y < level}`
    ParityCount { level: f64 },
}

/// Law of the rows of a one-dimensional dynamic environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum RowLaw {
    /// every row i.i.d. Bernoulli(p)
    Independent { p: f64 },
    /// each site keeps its previous-row value unless refreshed with
    /// probability `refresh`, in which case it is redrawn from Bernoulli(p)
    Markov { p: f64, refresh: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    Constant,
    IidSite {
        weights: Vec<f64>,
    },
    BooleanPercolation {
        intensity: f64,
        radius: RadiusLaw,
        alpha: f64,
        #[serde(default)]
        radius_shift: f64,
    },
    GaussianSign {
        q: QTable,
        decay: f64,
    },
    FactorIid {
        radius: u32,
        #[serde(flatten)]
        rule: FactorRule,
    },
    Dynamic1d {
        #[serde(flatten)]
        law: RowLaw,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Constant => "constant",
            Family::IidSite { .. } => "iid_site",
            Family::BooleanPercolation { .. } => "boolean_percolation",
            Family::GaussianSign { .. } => "gaussian_sign",
            Family::FactorIid { .. } => "factor_iid",
            Family::Dynamic1d { .. } => "dynamic_1d",
        }
    }

    pub fn state_count(&self) -> usize {
        match self {
            Family::Constant => 1,
            Family::IidSite { weights } => weights.len(),
            _ => 2,
        }
    }

    /// Declared mixing exponent, when the family carries one.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            Family::BooleanPercolation { alpha, .. } => Some(*alpha),
            Family::GaussianSign { decay, .. } => Some(*decay),
            _ => None,
        }
    }
}

/// Family, state-to-kernel map and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub family: Family,
    pub kernels: Vec<TransitionKernel>,
    #[serde(default)]
    pub seed: u64,
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidSpec(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

impl EnvironmentSpec {
    pub fn constant(kernel: TransitionKernel) -> Self {
        EnvironmentSpec { family: Family::Constant, kernels: vec![kernel], seed: 0 }
    }

    pub fn new(family: Family, kernels: Vec<TransitionKernel>, seed: u64) -> Result<Self> {
        let spec = EnvironmentSpec { family, kernels, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        EnvironmentSpec { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.family.state_count();
        if self.kernels.len() != n {
            return Err(Error::InvalidSpec(format!(
                "{} has {} states but {} kernels were given",
                self.family.name(),
                n,
                self.kernels.len()
            )));
        }
        for k in &self.kernels {
            TransitionKernel::new(k.probs())?;
        }
        match &self.family {
            Family::Constant => {}
            Family::IidSite { weights } => {
                if weights.is_empty() || weights.len() > 255 {
                    return Err(Error::InvalidSpec("iid_site needs between 1 and 255 states".into()));
                }
                for &w in weights {
                    check_prob("state weight", w)?;
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > KERNEL_TOLERANCE {
                    return Err(Error::InvalidSpec(format!("state weights sum to {total}")));
                }
            }
            Family::BooleanPercolation { intensity, radius, alpha, radius_shift } => {
                boolean::validate(*intensity, radius, *alpha, *radius_shift)?;
            }
            Family::GaussianSign { q, decay } => {
                q.validate()?;
                if !(decay.is_finite() && *decay >= 0.0) {
                    return Err(Error::InvalidSpec(format!("decay exponent {decay} must be finite and >= 0")));
                }
            }
            Family::FactorIid { rule, .. } => match rule {
                FactorRule::ThresholdMean { threshold } => check_prob("threshold", *threshold)?,
                FactorRule::ParityCount { level } => check_prob("level", *level)?,
            },
            Family::Dynamic1d { law } => match law {
                RowLaw::Independent { p } => check_prob("p", *p)?,
                RowLaw::Markov { p, refresh } => {
                    check_prob("p", *p)?;
                    if !(*refresh > 0.0 && *refresh <= 1.0) {
                        return Err(Error::InvalidSpec(format!("refresh {refresh} must lie in (0,1]")));
                    }
                }
            },
        }
        Ok(())
    }

    pub fn kernel_of_state(&self, s: u8) -> Result<TransitionKernel> {
        self.kernels
            .get(s as usize)
            .copied()
            .ok_or_else(|| Error::InvalidSpec(format!("state {s} has no kernel")))
    }

    pub fn build(&self, window: Window) -> Result<EnvironmentField> {
        EnvironmentField::new(self.clone(), window)
    }
}

#[derive(Clone, Debug)]
enum Backing {
    Lazy,
    Raster(Vec<u8>),
}

/// A seeded environment certified on a window.
#[derive(Clone, Debug)]
pub struct EnvironmentField {
    spec: EnvironmentSpec,
    window: Window,
    backing: Backing,
    balls: Option<BallProcess>,
}

const MARKOV_DEPTH_CAP: i64 = 1 << 20;

impl EnvironmentField {
    pub fn new(spec: EnvironmentSpec, window: Window) -> Result<Self> {
        spec.validate()?;
        let mut field = EnvironmentField { spec, window, backing: Backing::Lazy, balls: None };
        if let Family::BooleanPercolation { intensity, radius, radius_shift, .. } = &field.spec.family {
            if field.window.is_unbounded() {
                return Err(Error::InvalidSpec("boolean_percolation needs a finite window".into()));
            }
            if field.window.area() > MAX_MATERIALIZED_SITES {
                return Err(Error::CostGuard(format!("window of {} sites is too large", field.window.area())));
            }
            let process = BallProcess::sample(*intensity, radius, *radius_shift, &field.window, field.spec.seed);
            field.backing = Backing::Raster(process.rasterize(&field.window));
            field.balls = Some(process);
        }
        Ok(field)
    }

    pub fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    /// Sampled balls of a Boolean model, if this is one.
    pub fn balls(&self) -> Option<&BallProcess> {
        self.balls.as_ref()
    }

    fn sample_state(&self, x: Site) -> u8 {
        let seed = self.spec.seed;
        match &self.spec.family {
            Family::Constant => 0,
            Family::IidSite { weights } => {
                let u = rng::uniform(seed, Tag::SiteState, &[x.x, x.y]);
                let mut cum = 0.0;
                for (s, w) in weights.iter().enumerate() {
                    cum += w;
                    if u < cum {
                        return s as u8;
                    }
                }
                (weights.len() - 1) as u8
            }
            Family::BooleanPercolation { .. } => unreachable!("rasterized at construction"),
            Family::GaussianSign { q, .. } => u8::from(q.convolve(seed, x) >= 0.0),
            Family::FactorIid { radius, rule } => factor_state(seed, *radius, rule, x),
            Family::Dynamic1d { law } => match law {
                RowLaw::Independent { p } => u8::from(rng::uniform(seed, Tag::RowState, &[x.x, x.y]) < *p),
                RowLaw::Markov { p, refresh } => {
                    let mut row = x.y;
                    while rng::uniform(seed, Tag::RowRefresh, &[x.x, row]) >= *refresh && x.y - row < MARKOV_DEPTH_CAP {
                        row -= 1;
                    }
                    u8::from(rng::uniform(seed, Tag::RowState, &[x.x, row]) < *p)
                }
            },
        }
    }
}

fn factor_state(seed: u64, r0: u32, rule: &FactorRule, x: Site) -> u8 {
    let r = r0 as i64;
    let mut sum = 0.0;
    let mut count = 0u32;
    let mut below = 0u32;
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy > r * r {
                continue;
            }
            let y = rng::uniform(seed, Tag::FactorNoise, &[x.x + dx, x.y + dy]);
            sum += y;
            count += 1;
            if let FactorRule::ParityCount { level } = rule {
                below += u32::from(y < *level);
            }
        }
    }
    match rule {
        FactorRule::ThresholdMean { threshold } => u8::from(sum / count as f64 >= *threshold),
        FactorRule::ParityCount { .. } => (below % 2) as u8,
    }
}

impl KernelField for EnvironmentField {
    fn state(&self, x: Site) -> Result<u8> {
        if !self.window.contains(x) {
            return Err(Error::WindowExceeded(x));
        }
        Ok(match &self.backing {
            Backing::Lazy => self.sample_state(x),
            Backing::Raster(cells) => {
                let w = (self.window.x.end - self.window.x.start) as usize;
                cells[(x.y - self.window.y.start) as usize * w + (x.x - self.window.x.start) as usize]
            }
        })
    }

    fn kernel(&self, x: Site) -> Result<TransitionKernel> {
        let s = self.state(x)?;
        Ok(self.spec.kernels[s as usize])
    }
}

/// A field with some sites overridden by hand. Overridden sites report state
/// `u8::MAX`.
pub struct PatchedField<F> {
    pub base: F,
    pub overrides: FxHashMap<Site, TransitionKernel>,
}

impl<F: KernelField> PatchedField<F> {
    pub fn new(base: F) -> Self {
        PatchedField { base, overrides: FxHashMap::default() }
    }

    pub fn set(&mut self, x: Site, k: TransitionKernel) -> &mut Self {
        self.overrides.insert(x, k);
        self
    }
}

impl<F: KernelField> KernelField for PatchedField<F> {
    fn state(&self, x: Site) -> Result<u8> {
        if self.overrides.contains_key(&x) {
            return Ok(u8::MAX);
        }
        self.base.state(x)
    }

    fn kernel(&self, x: Site) -> Result<TransitionKernel> {
        match self.overrides.get(&x) {
            Some(k) => Ok(*k),
            None => self.base.kernel(x),
        }
    }
}

/// A field given by a closure `site -> (state, kernel)`.
pub struct FnField<F>(pub F);

impl<F> KernelField for FnField<F>
where
    F: Fn(Site) -> (u8, TransitionKernel) + Sync,
{
    fn state(&self, x: Site) -> Result<u8> {
        Ok((self.0)(x).0)
    }

    fn kernel(&self, x: Site) -> Result<TransitionKernel> {
        Ok((self.0)(x).1)
    }
}

/// Flat `x,y,state` dump of a window.
pub fn snapshot_csv<E: KernelField + ?Sized>(env: &E, window: &Window) -> Result<String> {
    let mut out = String::from("x,y,state\n");
    for s in window.sites() {
        let _ = writeln!(out, "{},{},{}", s.x, s.y, env.state(s)?);
    }
    Ok(out)
}
