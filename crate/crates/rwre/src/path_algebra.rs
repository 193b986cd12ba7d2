//! Loop decomposition of lattice paths and the barrier scenario classifier.

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::coupling::{hitting_index, History, PathRecord};
use crate::error::{Error, Result};
use crate::Site;

/// Nearest-neighbour path `f(0..=n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticePath {
    sites: Vec<Site>,
}

impl LatticePath {
    pub fn new(sites: Vec<Site>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidParameter("a path needs at least one site".into()));
        }
        for (n, w) in sites.windows(2).enumerate() {
            if (w[0].x - w[1].x).abs() + (w[0].y - w[1].y).abs() != 1 {
                return Err(Error::InvalidParameter(format!("sites {n} and {} are not neighbours", n + 1)));
            }
        }
        Ok(LatticePath { sites })
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

impl From<&PathRecord> for LatticePath {
    fn from(r: &PathRecord) -> Self {
        LatticePath { sites: r.sites.clone() }
    }
}

/// One erased loop, in original-path indices: `P = [t_in, t_out)` restricted
/// to indices still present, and `f(t_in) = f(t_out)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Loop {
    pub t_in: usize,
    pub t_out: usize,
    pub indices: Vec<usize>,
    pub sites: Vec<Site>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopDecomposition {
    pub loops: Vec<Loop>,
    pub residual: Vec<usize>,
}

impl LoopDecomposition {
    pub fn residual_sites(&self, path: &LatticePath) -> Vec<Site> {
        self.residual.iter().map(|&i| path.sites[i]).collect()
    }

    /// Checks disjointness, the partition of indices, loop soundness and
    /// injectivity of the residual.
    pub fn check(&self, path: &LatticePath) -> Result<()> {
        let n = path.len();
        let mut owner = vec![false; n];
        let mut mark = |i: usize| -> Result<()> {
            if i >= n || std::mem::replace(&mut owner[i], true) {
                return Err(Error::InvalidState(format!("index {i} is claimed twice or out of range")));
            }
            Ok(())
        };
        for l in &self.loops {
            if path.sites[l.t_in] != path.sites[l.t_out] || l.indices.first() != Some(&l.t_in) {
                return Err(Error::InvalidState(format!("loop [{}, {}) is not closed", l.t_in, l.t_out)));
            }
            let distinct: FxHashSet<Site> = l.indices.iter().map(|&i| path.sites[i]).collect();
            if distinct.len() != l.indices.len() {
                return Err(Error::InvalidState(format!("loop [{}, {}) revisits a site", l.t_in, l.t_out)));
            }
            for &i in &l.indices {
                mark(i)?;
            }
        }
        for &i in &self.residual {
            mark(i)?;
        }
        if owner.iter().any(|o| !o) {
            return Err(Error::InvalidState("indices are not partitioned".into()));
        }
        let sites = self.residual_sites(path);
        let distinct: FxHashSet<Site> = sites.iter().copied().collect();
        if distinct.len() != sites.len() {
            return Err(Error::InvalidState("residual is not self-avoiding".into()));
        }
        if sites.first() != path.sites.first() || sites.last() != path.sites.last() {
            return Err(Error::InvalidState("residual endpoints differ from the path's".into()));
        }
        Ok(())
    }
}

const LINEAR_SCAN_LIMIT: usize = 48;

/// Repeatedly removes the first loop of the remaining path. Each loop is
/// closed by the earliest index whose site already appears among the
/// surviving earlier indices, which is chronological loop erasure.
pub fn loop_decompose(path: &LatticePath) -> LoopDecomposition {
    let f = &path.sites;
    let mut stack: Vec<usize> = Vec::with_capacity(f.len());
    let mut loops = Vec::new();
    let mut where_: FxHashMap<Site, usize> = FxHashMap::default();
    let small = f.len() <= LINEAR_SCAN_LIMIT;
    for t in 0..f.len() {
        let s = f[t];
        let hit = if small {
            stack.iter().position(|&i| f[i] == s)
        } else {
            where_.get(&s).copied()
        };
        if let Some(p) = hit {
            let indices = stack.split_off(p);
            if !small {
                for &i in &indices {
                    where_.remove(&f[i]);
                }
            }
            let sites = indices.iter().map(|&i| f[i]).collect();
            loops.push(Loop { t_in: indices[0], t_out: t, indices, sites });
        }
        if !small {
            where_.insert(s, stack.len());
        }
        stack.push(t);
    }
    LoopDecomposition { loops, residual: stack }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// the left walk visits the column of `x0'` strictly below it
    S1LeftWalkPassesBelow,
    /// the right walk visits the column of `x0` strictly below it
    S2RightWalkPassesBelow,
    /// horizontal order preserved at the target height
    S3OrderPreserved,
    Violation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Witness {
    Step(usize),
    Final { left_x: i64, right_x: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BarrierVerdict {
    pub scenario: Scenario,
    pub witness: Witness,
}

/// Classifies a left walk from `x0` with history `gamma` and a right walk
/// from `x0'` at height `pi_2(x0) + h`. Scenarios are reported in the order
/// S1, S2, S3.
pub fn classify_barrier(left: &PathRecord, gamma: &History, right: &PathRecord, h: i64) -> Result<BarrierVerdict> {
    let x0 = left.start();
    let x1 = right.start();
    if x0.x >= x1.x {
        return Err(Error::InvalidConfiguration(format!("pi_1(x0) = {} is not left of pi_1(x0') = {}", x0.x, x1.x)));
    }
    if h <= x1.y - x0.y {
        return Err(Error::InvalidConfiguration(format!("H = {h} does not exceed the start height gap {}", x1.y - x0.y)));
    }
    let right_sites: FxHashSet<Site> = right.sites.iter().copied().collect();
    if let Some(s) = gamma.support().find(|s| right_sites.contains(s)) {
        return Err(Error::InvalidConfiguration(format!("history support meets the right path at ({}, {})", s.x, s.y)));
    }
    let target = x0.y + h;
    let tl = hitting_index(left, target)
        .ok_or_else(|| Error::InvalidConfiguration("left path does not reach the target height".into()))?;
    let tr = hitting_index(right, target)
        .ok_or_else(|| Error::InvalidConfiguration("right path does not reach the target height".into()))?;
    if let Some(n) = left.sites[..=tl].iter().position(|s| s.x == x1.x && s.y < x1.y) {
        return Ok(BarrierVerdict { scenario: Scenario::S1LeftWalkPassesBelow, witness: Witness::Step(n) });
    }
    if let Some(n) = right.sites[..=tr].iter().position(|s| s.x == x0.x && s.y < x0.y) {
        return Ok(BarrierVerdict { scenario: Scenario::S2RightWalkPassesBelow, witness: Witness::Step(n) });
    }
    let (lx, rx) = (left.sites[tl].x, right.sites[tr].x);
    let scenario = if lx <= rx { Scenario::S3OrderPreserved } else { Scenario::Violation };
    Ok(BarrierVerdict { scenario, witness: Witness::Final { left_x: lx, right_x: rx } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(points: &[(i64, i64)]) -> LatticePath {
        LatticePath::new(points.iter().map(|&(x, y)| Site::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn single_loop_by_hand() {
        let p = lp(&[(0, 0), (1, 0), (1, 1), (0, 1), (1, 1), (1, 2)]);
        let d = loop_decompose(&p);
        assert_eq!(d.loops.len(), 1);
        assert_eq!((d.loops[0].t_in, d.loops[0].t_out), (2, 4));
        assert_eq!(d.loops[0].indices, vec![2, 3]);
        assert_eq!(d.residual, vec![0, 1, 4, 5]);
        d.check(&p).unwrap();
    }

    #[test]
    fn self_avoiding_has_no_loops() {
        let p = lp(&[(0, 0), (1, 0), (1, 1), (2, 1)]);
        let d = loop_decompose(&p);
        assert!(d.loops.is_empty());
        assert_eq!(d.residual, vec![0, 1, 2, 3]);
    }

    #[test]
    fn rejects_jumps() {
        assert!(LatticePath::new(vec![Site::new(0, 0), Site::new(1, 1)]).is_err());
    }
}
