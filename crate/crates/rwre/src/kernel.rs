use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const KERNEL_TOLERANCE: f64 = 1e-12;

/// Unit steps in the fixed interval order E, W, N, S.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir {
    E,
    W,
    N,
    S,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::E, Dir::W, Dir::N, Dir::S];

    pub fn offset(self) -> (i64, i64) {
        match self {
            Dir::E => (1, 0),
            Dir::W => (-1, 0),
            Dir::N => (0, 1),
            Dir::S => (0, -1),
        }
    }
}

/// Jump law `p(s, .)` of one environment state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct TransitionKernel {
    probs: [f64; 4],
}

impl TransitionKernel {
    pub const UNIFORM: TransitionKernel = TransitionKernel { probs: [0.25; 4] };

    pub fn new(probs: [f64; 4]) -> Result<Self> {
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidSpec(format!("kernel entries must lie in [0,1]: {probs:?}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > KERNEL_TOLERANCE {
            return Err(Error::InvalidSpec(format!("kernel sums to {total}, not 1")));
        }
        Ok(TransitionKernel { probs })
    }

    pub fn deterministic(dir: Dir) -> Self {
        let mut probs = [0.0; 4];
        probs[dir as usize] = 1.0;
        TransitionKernel { probs }
    }

    pub fn probs(&self) -> [f64; 4] {
        self.probs
    }

    pub fn prob(&self, dir: Dir) -> f64 {
        self.probs[dir as usize]
    }

    pub fn north(&self) -> f64 {
        self.probs[2]
    }

    /// Vertical drift `p_N - p_S`.
    pub fn vertical_drift(&self) -> f64 {
        self.probs[2] - self.probs[3]
    }

    /// The direction whose half-open cumulative interval contains `u`.
    #[inline]
    pub fn jump(&self, u: f64) -> Dir {
        let mut cum = 0.0;
        for dir in Dir::ALL {
            cum += self.probs[dir as usize];
            if u < cum {
                return dir;
            }
        }
        // rounding can leave a sliver above the last boundary
        *Dir::ALL.iter().rev().find(|d| self.probs[**d as usize] > 0.0).unwrap_or(&Dir::S)
    }
}

impl TryFrom<[f64; 4]> for TransitionKernel {
    type Error = Error;
    fn try_from(p: [f64; 4]) -> Result<Self> {
        TransitionKernel::new(p)
    }
}

impl From<TransitionKernel> for [f64; 4] {
    fn from(k: TransitionKernel) -> [f64; 4] {
        k.probs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jump_boundaries() {
        let k = TransitionKernel::UNIFORM;
        assert_eq!(k.jump(0.1), Dir::E);
        assert_eq!(k.jump(0.25), Dir::W);
        assert_eq!(k.jump(0.5), Dir::N);
        assert_eq!(k.jump(0.999), Dir::S);
        let north = TransitionKernel::new([0.0, 0.0, 1.0, 0.0]).unwrap();
        for u in [0.0, 0.3, 0.999_999_999] {
            assert_eq!(north.jump(u), Dir::N);
        }
    }

    #[test]
    fn rejects_bad_sums() {
        assert!(TransitionKernel::new([0.3, 0.3, 0.3, 0.3]).is_err());
        assert!(TransitionKernel::new([1.1, -0.1, 0.0, 0.0]).is_err());
        assert!(TransitionKernel::new([0.1, 0.2, 0.3, 0.4 + 5e-13]).is_ok());
    }

    #[test]
    fn sliver_goes_to_last_positive() {
        let k = TransitionKernel::new([0.5, 0.0, 0.5 - 1e-13, 0.0]).unwrap();
        assert_eq!(k.jump(1.0 - 1e-15), Dir::N);
    }
}
