//! Monte Carlo laboratory for coupled random walks in random environments on
//! `Z^2`.
//!
//! The crate is organised bottom-up:
//!
//! * [`rng`]: counter-based keyed hashing, the only source of randomness;
//! * [`kernel`] and [`env`]: jump laws and the environment families;
//! * [`coupling`]: the shared uniforms `U(x, i)`, histories, walks, hitting
//!   times, the shift operator and cut lines;
//! * [`geometry`]: boxes, grids, scale schedules and rounded points;
//! * [`path_algebra`]: loop decomposition and the barrier classifier;
//! * [`estimators`]: directions, traps, threats and threatened densities;
//! * [`verify`]: the property suites behind `rwre verify`;
//! * [`experiment`]: configs, manifests and the CLI commands.

pub mod coupling;
pub mod env;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod geometry;
pub mod kernel;
pub mod path_algebra;
pub mod rng;
pub mod stats;
pub mod verify;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};

/// A lattice site of `Z^2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x: i64,
    pub y: i64,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Site { x, y }
    }

    pub fn shifted(self, dx: i64, dy: i64) -> Self {
        Site { x: self.x + dx, y: self.y + dy }
    }
}
