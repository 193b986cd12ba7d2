//! Boxes, grids, scale schedules and rounding. Everything here is exact:
//! real first coordinates are rationals, schedules are big integers.

use std::fmt::Write as _;
use std::ops::Range;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Site;

pub type Q = Ratio<i128>;

pub fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(n as i128)
}

pub fn floor_i64(x: &Q) -> i64 {
    x.floor().to_integer() as i64
}

pub fn ceil_i64(x: &Q) -> i64 {
    x.ceil().to_integer() as i64
}

/// Integers `n` with `lo <= n < hi`.
pub fn int_range(lo: &Q, hi: &Q) -> Range<i64> {
    ceil_i64(lo)..ceil_i64(hi)
}

/// `H' = ceil(sqrt(H))`.
pub fn h_prime(h: u64) -> u64 {
    let s = h.isqrt();
    if s * s == h {
        s
    } else {
        s + 1
    }
}

/// `H'` for a rational height; `k^2 >= H` iff `k^2 >= ceil(H)` for integer `k`.
pub fn h_prime_q(h: &Q) -> i64 {
    let c = h.ceil().to_integer().max(0) as u64;
    h_prime(c) as i64
}

/// Half-open real box `[a1, b1) x [a2, b2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealBox {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
}

impl RealBox {
    pub fn new(a1: f64, b1: f64, a2: f64, b2: f64) -> Result<Self> {
        let b = RealBox { a1, b1, a2, b2 };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a1 < self.b1 && self.a2 < self.b2) {
            return Err(Error::InvalidGeometry(format!("degenerate box {self:?}")));
        }
        Ok(())
    }

    pub fn diam(&self) -> f64 {
        self.b1 - self.a1
    }

    pub fn height(&self) -> f64 {
        self.b2 - self.a2
    }

    pub fn contains(&self, s: Site) -> bool {
        let (x, y) = (s.x as f64, s.y as f64);
        self.a1 <= x && x < self.b1 && self.a2 <= y && y < self.b2
    }

    pub fn sites(&self) -> Vec<Site> {
        let xs = self.a1.ceil() as i64..self.b1.ceil() as i64;
        let ys = self.a2.ceil() as i64..self.b2.ceil() as i64;
        ys.flat_map(|y| xs.clone().map(move |x| Site::new(x, y))).collect()
    }
}

/// Vertical separation of two boxes.
pub fn sep(b: &RealBox, bp: &RealBox) -> f64 {
    if bp.b2 < b.a2 {
        b.a2 - bp.b2
    } else if b.b2 < bp.a2 {
        bp.a2 - b.b2
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxPair {
    pub b: RealBox,
    pub b_prime: RealBox,
}

impl BoxPair {
    pub fn new(b: RealBox, b_prime: RealBox) -> Result<Self> {
        b.validate()?;
        b_prime.validate()?;
        Ok(BoxPair { b, b_prime })
    }

    pub fn sep(&self) -> f64 {
        sep(&self.b, &self.b_prime)
    }
}

/// Point of `R x Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RefPoint {
    pub x: Q,
    pub y: i64,
}

impl RefPoint {
    pub fn new(x: Q, y: i64) -> Self {
        RefPoint { x, y }
    }

    pub fn origin() -> Self {
        RefPoint { x: Q::zero(), y: 0 }
    }

    pub fn offset(&self, dx: Q, dy: i64) -> Self {
        RefPoint { x: self.x + dx, y: self.y + dy }
    }
}

impl From<Site> for RefPoint {
    fn from(s: Site) -> Self {
        RefPoint { x: qi(s.x), y: s.y }
    }
}

/// The boxes attached to a reference point `w` at scale `H`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxGeometry {
    pub w: RefPoint,
    pub h: Q,
    pub beta: Q,
}

impl BoxGeometry {
    pub fn new(w: RefPoint, h: Q, beta: Q) -> Result<Self> {
        if h <= Q::zero() {
            return Err(Error::InvalidGeometry("H must be positive".into()));
        }
        if beta < Q::zero() {
            return Err(Error::InvalidGeometry("beta must be nonnegative".into()));
        }
        Ok(BoxGeometry { w, h, beta })
    }

    pub fn h_prime(&self) -> i64 {
        h_prime_q(&self.h)
    }

    /// `I_H(w)`: lattice points of `w + [0,H) x [0,H')`.
    pub fn start_box(&self) -> Vec<Site> {
        let xs = int_range(&self.w.x, &(self.w.x + self.h));
        (self.w.y..self.w.y + self.h_prime())
            .flat_map(|y| xs.clone().map(move |x| Site::new(x, y)))
            .collect()
    }

    /// The line `w + [0,H) x {0}`.
    pub fn start_line(&self) -> Vec<Site> {
        int_range(&self.w.x, &(self.w.x + self.h)).map(|x| Site::new(x, self.w.y)).collect()
    }

    /// Integer abscissae of `B_H(w)`.
    pub fn outer_x_range(&self) -> Range<i64> {
        let lo = self.w.x - self.beta * self.h;
        let hi = self.w.x + (self.beta + Q::one()) * self.h;
        int_range(&lo, &hi)
    }

    /// Integer ordinates of `B_H(w)`, top row included.
    pub fn outer_y_range(&self) -> Range<i64> {
        let top = floor_i64(&(qi(self.w.y) + self.h));
        self.w.y - self.h_prime()..top + 1
    }

    pub fn outer_contains(&self, s: Site) -> bool {
        self.outer_x_range().contains(&s.x) && self.outer_y_range().contains(&s.y)
    }

    pub fn outer_diam(&self) -> Q {
        (qi(2) * self.beta + Q::one()) * self.h
    }

    pub fn outer_height(&self) -> Q {
        self.h + qi(self.h_prime())
    }
}

/// Rectangular index grid `anchor + (i*cell, j*cell)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub anchor: RefPoint,
    pub cell: i64,
    pub i_range: Range<i64>,
    pub j_range: Range<i64>,
}

impl GridSpec {
    /// The grid covering `B_{H_{k+1}}` at scale `H_k` with ratio `l_k`.
    pub fn renormalization(h_k: i64, l_k: i64, beta: Q) -> Self {
        let lq = qi(l_k);
        let h_next = h_k * l_k;
        let hp_next = h_prime(h_next as u64) as i64;
        GridSpec {
            anchor: RefPoint::origin(),
            cell: h_k,
            i_range: -ceil_i64(&(beta * lq))..ceil_i64(&((beta + Q::one()) * lq)),
            j_range: -(hp_next / h_k)..l_k,
        }
    }

    pub fn cardinality(&self) -> usize {
        self.i_range.clone().count() * self.j_range.clone().count()
    }

    pub fn points(&self) -> Vec<RefPoint> {
        let mut out = Vec::with_capacity(self.cardinality());
        for j in self.j_range.clone() {
            for i in self.i_range.clone() {
                out.push(self.anchor.offset(qi(i * self.cell), j * self.cell));
            }
        }
        out
    }
}

/// `floor(y)_H` on the lattice `floor(delta H / 4) Z x H' Z`.
pub fn round_point(y: Site, h: i64, delta: Q) -> Result<Site> {
    if delta <= Q::zero() || h <= 0 {
        return Err(Error::InvalidParameter("rounding needs delta > 0 and H > 0".into()));
    }
    if delta * qi(h) < qi(4) {
        return Err(Error::InvalidParameter(format!("rounding needs H >= 4/delta (H = {h}, delta = {delta})")));
    }
    let ht = floor_i64(&(delta * qi(h) / qi(4)));
    let hp = h_prime(h as u64) as i64;
    Ok(Site::new(y.x.div_euclid(ht) * ht, y.y.div_euclid(hp) * hp))
}

/// Exact `floor(n^(1/4))` by bisection.
pub fn fourth_root(n: &BigUint) -> BigUint {
    let mut lo = BigUint::zero();
    let mut hi = BigUint::one() << (n.bits() / 4 + 1);
    // invariant: lo^4 <= n < hi^4
    while &hi - &lo > BigUint::one() {
        let mid = (&lo + &hi) >> 1u32;
        if mid.pow(4u32) <= *n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `L_{k+1} = l_k L_k` with `l_k = floor(L_k^(1/4))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleSchedule {
    big: Vec<BigUint>,
    small: Vec<BigUint>,
    degenerate_at: Option<usize>,
}

impl ScaleSchedule {
    pub fn new(l0: &BigUint, depth: usize) -> Result<Self> {
        if *l0 < BigUint::from(2u32) {
            return Err(Error::InvalidParameter("L_0 must be at least 2".into()));
        }
        if depth == 0 {
            return Err(Error::InvalidParameter("depth must be at least 1".into()));
        }
        let mut big = vec![l0.clone()];
        let mut small = Vec::with_capacity(depth + 1);
        let mut degenerate_at = None;
        for k in 0..=depth {
            let l = fourth_root(&big[k]);
            if l <= BigUint::one() && degenerate_at.is_none() {
                degenerate_at = Some(k);
            }
            if k < depth {
                big.push(&big[k] * &l);
            }
            small.push(l);
        }
        Ok(ScaleSchedule { big, small, degenerate_at })
    }

    pub fn from_u64(l0: u64, depth: usize) -> Result<Self> {
        Self::new(&BigUint::from(l0), depth)
    }

    pub fn depth(&self) -> usize {
        self.big.len() - 1
    }

    pub fn big_l_exact(&self, k: usize) -> &BigUint {
        &self.big[k]
    }

    pub fn small_l_exact(&self, k: usize) -> &BigUint {
        &self.small[k]
    }

    pub fn big_l(&self, k: usize) -> Result<u64> {
        self.get(&self.big, k, "L")
    }

    pub fn small_l(&self, k: usize) -> Result<u64> {
        self.get(&self.small, k, "l")
    }

    fn get(&self, v: &[BigUint], k: usize, name: &str) -> Result<u64> {
        let x = v
            .get(k)
            .ok_or_else(|| Error::InvalidParameter(format!("{name}_{k} beyond schedule depth {}", self.depth())))?;
        x.to_u64().ok_or_else(|| Error::Overflow(format!("{name}_{k} = {x} exceeds 64 bits")))
    }

    /// First level whose ratio `l_k` is at most 1, after which the schedule stalls.
    pub fn degenerate_at(&self) -> Option<usize> {
        self.degenerate_at
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate_at.is_some()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,L_k,l_k\n");
        for k in 0..self.big.len() {
            let _ = writeln!(s, "{},{},{}", k, self.big[k], self.small[k]);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_root_edges() {
        for n in [0u64, 1, 15, 16, 17, 80, 81, 82, 9_999_999_999, 10_000_000_000] {
            let r = fourth_root(&BigUint::from(n)).to_u64().unwrap();
            assert!(r.pow(4) <= n && (r + 1).pow(4) > n, "{n} -> {r}");
        }
    }

    #[test]
    fn b_box_rows_include_top() {
        let g = BoxGeometry::new(RefPoint::origin(), qi(9), qi(1)).unwrap();
        assert_eq!(g.outer_y_range(), -3..10);
        assert_eq!(g.outer_x_range(), -9..18);
        assert!(g.outer_contains(Site::new(-9, 9)));
        assert!(!g.outer_contains(Site::new(18, 0)));
        assert!(!g.outer_contains(Site::new(0, 10)));
    }

    #[test]
    fn rational_anchor_ranges() {
        let w = RefPoint::new(q(1, 2), 0);
        let g = BoxGeometry::new(w, qi(3), qi(1)).unwrap();
        // [0.5, 3.5) contains 1, 2, 3
        assert_eq!(g.start_line().iter().map(|s| s.x).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(h_prime_q(&q(5, 2)), 2);
        assert_eq!(h_prime_q(&qi(4)), 2);
    }
}
