use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Tag};
use crate::Site;

/// Relative cutoff below which kernel entries are dropped.
pub const Q_TRUNCATION: f64 = 1e-12;

/// Finitely supported convolution kernel `q`, symmetric under `x1 -> -x1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(i64, i64, f64)>", into = "Vec<(i64, i64, f64)>")]
pub struct QTable {
    entries: Vec<(i64, i64, f64)>,
}

impl QTable {
    pub fn new(entries: Vec<(i64, i64, f64)>) -> Result<Self> {
        let mut map = FxHashMap::default();
        for &(dx, dy, v) in &entries {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidSpec(format!("q({dx},{dy}) = {v} must be finite and >= 0")));
            }
            if map.insert((dx, dy), v).is_some() {
                return Err(Error::InvalidSpec(format!("q({dx},{dy}) given twice")));
            }
        }
        for (&(dx, dy), &v) in &map {
            let mirror = map.get(&(-dx, dy)).copied().unwrap_or(0.0);
            if mirror != v {
                return Err(Error::InvalidSpec(format!("q({dx},{dy}) = {v} but q({},{dy}) = {mirror}", -dx)));
            }
        }
        let top = entries.iter().map(|e| e.2).fold(0.0, f64::max);
        if top == 0.0 {
            return Err(Error::InvalidSpec("q is identically zero".into()));
        }
        let reference = map.get(&(0, 0)).copied().filter(|&v| v > 0.0).unwrap_or(top);
        let mut kept: Vec<_> = entries.into_iter().filter(|e| e.2 >= Q_TRUNCATION * reference).collect();
        kept.sort_by_key(|e| (e.1, e.0));
        Ok(QTable { entries: kept })
    }

    /// `q = 1{o}`.
    pub fn point() -> Self {
        QTable { entries: vec![(0, 0, 1.0)] }
    }

    /// Indicator of the Euclidean ball of radius `r`.
    pub fn uniform_ball(r: i64) -> Self {
        Self::power_law(0.0, r)
    }

    /// `q(x) = (1 + |x|)^(-decay)` on the ball of radius `r`.
    pub fn power_law(decay: f64, r: i64) -> Self {
        let mut e = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy <= r * r {
                    let d = ((dx * dx + dy * dy) as f64).sqrt();
                    e.push((dx, dy, (1.0 + d).powf(-decay)));
                }
            }
        }
        QTable::new(e).expect("ball kernels are symmetric and nonzero")
    }

    pub fn entries(&self) -> &[(i64, i64, f64)] {
        &self.entries
    }

    pub fn validate(&self) -> Result<()> {
        QTable::new(self.entries.clone()).map(|_| ())
    }

    /// Smallest `c` with `q(x) <= c |x|^(-decay)` on the stored table.
    pub fn decay_constant(&self, decay: f64) -> f64 {
        self.entries
            .iter()
            .filter(|e| (e.0, e.1) != (0, 0))
            .map(|&(dx, dy, v)| v * ((dx * dx + dy * dy) as f64).sqrt().powf(decay))
            .fold(0.0, f64::max)
    }

    /// `g_x = sum_y q(x - y) W_y`.
    pub fn convolve(&self, seed: u64, x: Site) -> f64 {
        self.entries
            .iter()
            .map(|&(dx, dy, v)| v * rng::standard_normal(seed, Tag::Gaussian, &[x.x - dx, x.y - dy]))
            .sum()
    }
}

impl TryFrom<Vec<(i64, i64, f64)>> for QTable {
    type Error = Error;
    fn try_from(e: Vec<(i64, i64, f64)>) -> Result<Self> {
        QTable::new(e)
    }
}

impl From<QTable> for Vec<(i64, i64, f64)> {
    fn from(q: QTable) -> Self {
        q.entries
    }
}
