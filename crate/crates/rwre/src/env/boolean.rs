use serde::{Deserialize, Serialize};

use super::Window;
use crate::error::{Error, Result};
use crate::rng::{self, Tag};
use crate::Site;

/// Tail probability left outside the truncation radius.
pub const RADIUS_TAIL: f64 = 1e-9;
const MAX_CELL_INTENSITY: f64 = 500.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum RadiusLaw {
    Constant { r: f64 },
    /// `P(Z > z) = (scale / z)^exponent` for `z >= scale`
    Pareto { scale: f64, exponent: f64 },
}

impl RadiusLaw {
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            RadiusLaw::Constant { r } => r,
            RadiusLaw::Pareto { scale, exponent } => scale * (1.0 - p).powf(-1.0 / exponent),
        }
    }

    pub fn has_moment(&self, order: f64) -> bool {
        match *self {
            RadiusLaw::Constant { .. } => true,
            RadiusLaw::Pareto { exponent, .. } => exponent > order,
        }
    }

    fn sample(&self, u: f64) -> f64 {
        self.quantile(u)
    }

    /// Upper bound on the mean number of balls centered beyond distance
    /// `reach - shift` that still touch a window of perimeter `perimeter`.
    fn escape_bound(&self, intensity: f64, reach: f64, shift: f64, perimeter: f64) -> f64 {
        match *self {
            RadiusLaw::Constant { r } => {
                if r + shift <= reach {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            RadiusLaw::Pareto { scale, exponent: a } => {
                let u0 = (reach - shift).max(scale);
                let sa = scale.powf(a);
                intensity
                    * sa
                    * ((perimeter + std::f64::consts::TAU * shift) * u0.powf(1.0 - a) / (a - 1.0)
                        + std::f64::consts::TAU * u0.powf(2.0 - a) / (a - 2.0))
            }
        }
    }
}

pub(super) fn validate(intensity: f64, radius: &RadiusLaw, alpha: f64, shift: f64) -> Result<()> {
    if !(intensity > 0.0 && intensity <= MAX_CELL_INTENSITY) {
        return Err(Error::InvalidSpec(format!("intensity {intensity} must lie in (0, {MAX_CELL_INTENSITY}]")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidSpec(format!("alpha {alpha} must be positive")));
    }
    if !(shift >= 0.0 && shift.is_finite()) {
        return Err(Error::InvalidSpec(format!("radius shift {shift} must be >= 0")));
    }
    match *radius {
        RadiusLaw::Constant { r } if !(r >= 0.0 && r.is_finite()) => {
            return Err(Error::InvalidSpec(format!("radius {r} must be finite and >= 0")));
        }
        RadiusLaw::Pareto { scale, exponent } if !(scale > 0.0 && exponent > 0.0) => {
            return Err(Error::InvalidSpec("pareto scale and exponent must be positive".into()));
        }
        _ => {}
    }
    if !radius.has_moment(2.0 + alpha) {
        return Err(Error::InvalidSpec(format!("radius law {radius:?} has an infinite moment of order 2 + {alpha}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl Ball {
    pub fn covers(&self, s: Site) -> bool {
        let dx = s.x as f64 - self.cx;
        let dy = s.y as f64 - self.cy;
        dx * dx + dy * dy <= self.r * self.r
    }
}

/// Poisson balls whose centers fall in the window enlarged by the truncation
/// radius.
#[derive(Clone, Debug)]
pub struct BallProcess {
    pub balls: Vec<Ball>,
    /// `1 - 1e-9` quantile of the radius law
    pub r_max: f64,
    /// cells of width 1 scanned on every side of the window
    pub reach: i64,
    /// bound on the mean number of ignored balls that would touch the window
    pub truncation_bound: f64,
}

impl BallProcess {
    pub fn sample(intensity: f64, law: &RadiusLaw, shift: f64, window: &Window, seed: u64) -> Self {
        let r_max = law.quantile(1.0 - RADIUS_TAIL);
        let reach = (r_max + shift).ceil() as i64;
        let mut balls = Vec::new();
        for cy in window.y.start - reach..window.y.end + reach {
            for cx in window.x.start - reach..window.x.end + reach {
                let count = rng::poisson_inverse(intensity, rng::uniform(seed, Tag::PoissonCount, &[cx, cy]));
                for k in 0..count as i64 {
                    let ux = rng::uniform(seed, Tag::PoissonPoint, &[cx, cy, k, 0]);
                    let uy = rng::uniform(seed, Tag::PoissonPoint, &[cx, cy, k, 1]);
                    let ur = rng::uniform(seed, Tag::PoissonPoint, &[cx, cy, k, 2]);
                    balls.push(Ball { cx: cx as f64 + ux, cy: cy as f64 + uy, r: law.sample(ur) + shift });
                }
            }
        }
        let perimeter = 2.0 * ((window.x.end - window.x.start) + (window.y.end - window.y.start)) as f64;
        let truncation_bound = law.escape_bound(intensity, reach as f64, shift, perimeter);
        BallProcess { balls, r_max, reach, truncation_bound }
    }

    /// Occupancy (1) or vacancy (0) of every window site, row-major.
    pub fn rasterize(&self, window: &Window) -> Vec<u8> {
        let w = (window.x.end - window.x.start) as usize;
        let h = (window.y.end - window.y.start) as usize;
        let mut cells = vec![0u8; w * h];
        for b in &self.balls {
            let x0 = ((b.cx - b.r).ceil() as i64).max(window.x.start);
            let x1 = ((b.cx + b.r).floor() as i64).min(window.x.end - 1);
            let y0 = ((b.cy - b.r).ceil() as i64).max(window.y.start);
            let y1 = ((b.cy + b.r).floor() as i64).min(window.y.end - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if b.covers(Site::new(x, y)) {
                        cells[(y - window.y.start) as usize * w + (x - window.x.start) as usize] = 1;
                    }
                }
            }
        }
        cells
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pareto_quantile_and_moments() {
        let law = RadiusLaw::Pareto { scale: 1.0, exponent: 4.0 };
        assert!((law.quantile(1.0 - 1e-8) - 100.0).abs() < 1e-6);
        assert!(law.has_moment(3.5));
        assert!(!law.has_moment(4.0));
        assert!(validate(1.0, &law, 2.5, 0.0).is_err());
        assert!(validate(1.0, &law, 1.5, 0.0).is_ok());
    }

    #[test]
    fn constant_radius_has_no_escape() {
        let w = Window::new(0..5, 0..5);
        let p = BallProcess::sample(0.5, &RadiusLaw::Constant { r: 1.2 }, 0.0, &w, 3);
        assert_eq!(p.reach, 2);
        assert_eq!(p.truncation_bound, 0.0);
    }
}
