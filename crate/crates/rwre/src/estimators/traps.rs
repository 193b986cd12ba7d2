use std::sync::atomic::{AtomicI64, Ordering};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::Slope;
use crate::coupling::{run_until_height, UniformSource, Walk};
use crate::env::KernelField;
use crate::error::{Error, Result};
use crate::geometry::{ceil_i64, h_prime, qi, round_point, BoxGeometry, RefPoint, ScaleSchedule, Q};
use crate::kernel::TransitionKernel;
use crate::Site;

/// Largest `h L_k` the density estimator will simulate.
pub const DENSITY_COST_LIMIT: u64 = 10_000_000;

/// Three-valued outcome; `Unknown` comes from censored walks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    pub fn and(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Unknown,
        }
    }

    pub fn any(items: impl IntoIterator<Item = Truth>) -> Truth {
        let mut out = Truth::False;
        for t in items {
            match t {
                Truth::True => return Truth::True,
                Truth::Unknown => out = Truth::Unknown,
                Truth::False => {}
            }
        }
        out
    }

    pub fn from_bool(b: bool) -> Truth {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }
}

/// Parameters of the renormalization diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct RenormParams {
    pub beta: Q,
    pub v_minus: Q,
    pub v_plus: Q,
    pub delta: Q,
    pub r: u32,
    pub schedule: ScaleSchedule,
}

impl RenormParams {
    /// Validates `v- < v+` inside `[-beta, beta]` and sets
    /// `delta = (v+ - v-) / (5 (beta + 1))`.
    pub fn new(beta: Q, v_minus: Q, v_plus: Q, r: u32, schedule: ScaleSchedule) -> Result<Self> {
        if beta <= Q::zero() {
            return Err(Error::InvalidParameter("beta must be positive".into()));
        }
        if !(v_minus < v_plus) {
            return Err(Error::InvalidParameter(format!("need v- < v+, got {v_minus} and {v_plus}")));
        }
        if v_minus < -beta || v_plus > beta {
            return Err(Error::InvalidParameter(format!("directions must lie in [-{beta}, {beta}]")));
        }
        if r == 0 {
            return Err(Error::InvalidParameter("threat range r must be >= 1".into()));
        }
        let delta = (v_plus - v_minus) / (qi(5) * (beta + Q::one()));
        debug_assert!(delta > Q::zero() && delta <= Q::new(1, 2));
        Ok(RenormParams { beta, v_minus, v_plus, delta, r, schedule })
    }

    /// Overrides `delta`, e.g. for surrogate values in experiments.
    pub fn with_delta(mut self, delta: Q) -> Result<Self> {
        if !(delta > Q::zero() && delta <= Q::new(1, 2)) {
            return Err(Error::InvalidParameter(format!("delta = {delta} must lie in (0, 1/2]")));
        }
        self.delta = delta;
        Ok(self)
    }
}

/// Records the lowest and highest rows a computation looked at.
#[derive(Debug)]
pub struct BandProbe {
    lo: AtomicI64,
    hi: AtomicI64,
}

impl Default for BandProbe {
    fn default() -> Self {
        BandProbe { lo: AtomicI64::new(i64::MAX), hi: AtomicI64::new(i64::MIN) }
    }
}

impl BandProbe {
    fn touch(&self, y: i64) {
        self.lo.fetch_min(y, Ordering::Relaxed);
        self.hi.fetch_max(y, Ordering::Relaxed);
    }

    pub fn band(&self) -> Option<(i64, i64)> {
        let lo = self.lo.load(Ordering::Relaxed);
        let hi = self.hi.load(Ordering::Relaxed);
        (lo <= hi).then_some((lo, hi))
    }
}

struct Probed<'a, T: ?Sized> {
    inner: &'a T,
    probe: &'a BandProbe,
}

impl<E: KernelField + ?Sized> KernelField for Probed<'_, E> {
    fn state(&self, x: Site) -> Result<u8> {
        self.probe.touch(x.y);
        self.inner.state(x)
    }
    fn kernel(&self, x: Site) -> Result<TransitionKernel> {
        self.probe.touch(x.y);
        self.inner.kernel(x)
    }
}

struct ProbedU<'a, U: ?Sized> {
    inner: &'a U,
    probe: &'a BandProbe,
}

impl<U: UniformSource + ?Sized> UniformSource for ProbedU<'_, U> {
    fn uniform(&self, x: Site, i: u64) -> f64 {
        self.probe.touch(x.y);
        self.inner.uniform(x, i)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapCandidate {
    pub y: Site,
    /// `V_{H-2H', z_w} <= v- + delta`
    pub direction_ok: Truth,
    /// `Y_n >= pi_2(w) + H'` up to the hitting time
    pub stays_in_band: Truth,
    pub v: Option<Slope>,
}

impl TrapCandidate {
    pub fn verdict(&self) -> Truth {
        self.direction_ok.and(self.stays_in_band)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapReport {
    pub w: RefPoint,
    pub h: i64,
    pub z_w: RefPoint,
    pub verdict: Truth,
    pub witness: Option<Site>,
    pub candidates: Vec<TrapCandidate>,
    pub unknown: usize,
    /// rows `[pi_2(w) + H', pi_2(w) + H]` the definition may depend on
    pub band: (i64, i64),
    /// rows actually read
    pub read_band: Option<(i64, i64)>,
}

impl TrapReport {
    pub fn found(&self) -> bool {
        self.verdict == Truth::True
    }
}

/// Decides whether `w` is `H`-trapped by simulating every start in
/// `I_{delta H}(z_w)` up to height `pi_2(w) + H`. A walk is stopped as soon as
/// it drops below `pi_2(w) + H'`, so nothing outside the band is read.
pub fn trap_scan<E, U>(env: &E, u: &U, w: RefPoint, h: i64, params: &RenormParams, cap: u64) -> Result<TrapReport>
where
    E: KernelField + ?Sized,
    U: UniformSource + ?Sized,
{
    let hp = h_prime(h.max(0) as u64) as i64;
    if h <= 0 || params.delta <= Q::zero() || qi(h) < qi(ceil_i64(&(qi(4) / params.delta))) {
        return Err(Error::InvalidParameter(format!("trap scan needs H >= ceil(4/delta), got H = {h}")));
    }
    if 2 * hp > h {
        return Err(Error::InvalidParameter(format!("trap scan needs H' <= H/2, got H = {h}")));
    }
    let dh = params.delta * qi(h);
    let z_w = w.offset(dh + qi(4) * params.beta * qi(hp), 2 * hp);
    let starts = BoxGeometry::new(z_w, dh, params.beta)?.start_box();
    let reach = h - 2 * hp;
    let target = z_w.y + reach;
    let floor = w.y + hp;
    let probe = BandProbe::default();
    let env = Probed { inner: env, probe: &probe };
    let u = ProbedU { inner: u, probe: &probe };
    let bound = params.v_minus + params.delta;
    let mut candidates = Vec::with_capacity(starts.len());
    for y in starts {
        let mut walk = Walk::new(y);
        let mut outcome = None;
        let mut dipped = false;
        if walk.position().y >= target {
            outcome = Some(walk.position());
        } else {
            for _ in 0..cap {
                match walk.step(&env, &u) {
                    Ok(_) => {}
                    Err(Error::WindowExceeded(_)) => break,
                    Err(e) => return Err(e),
                }
                let p = walk.position();
                if p.y < floor {
                    dipped = true;
                    break;
                }
                if p.y == target {
                    outcome = Some(p);
                    break;
                }
            }
        }
        let cand = match (dipped, outcome) {
            (true, _) => TrapCandidate { y, direction_ok: Truth::Unknown, stays_in_band: Truth::False, v: None },
            (false, Some(end)) => {
                let v = Ratio::new(end.x - y.x, reach);
                let ok = super::slope_to_q(v) <= bound;
                TrapCandidate { y, direction_ok: Truth::from_bool(ok), stays_in_band: Truth::True, v: Some(v) }
            }
            (false, None) => TrapCandidate { y, direction_ok: Truth::Unknown, stays_in_band: Truth::Unknown, v: None },
        };
        candidates.push(cand);
    }
    let verdict = Truth::any(candidates.iter().map(|c| c.verdict()));
    let witness = candidates.iter().find(|c| c.verdict() == Truth::True).map(|c| c.y);
    let unknown = candidates.iter().filter(|c| c.verdict() == Truth::Unknown).count();
    Ok(TrapReport {
        w,
        h,
        z_w,
        verdict,
        witness,
        candidates,
        unknown,
        band: (floor, w.y + h),
        read_band: probe.band(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreatReport {
    pub w: RefPoint,
    pub h: i64,
    pub r: u32,
    pub verdict: Truth,
    pub traps: Vec<TrapReport>,
}

impl ThreatReport {
    /// Verdict for a smaller range `r' <= r`, from the same scans.
    pub fn verdict_at(&self, r: u32) -> Truth {
        Truth::any(self.traps.iter().take(r as usize).map(|t| t.verdict))
    }

    pub fn unknown(&self) -> usize {
        self.traps.iter().map(|t| t.unknown).sum()
    }
}

/// `(H, r)`-threat: a trap at one of `w_j = w + j H (v+, 1)`, `j < r`.
pub fn threat_scan<E, U>(env: &E, u: &U, w: RefPoint, h: i64, r: u32, params: &RenormParams, cap: u64) -> Result<ThreatReport>
where
    E: KernelField + ?Sized,
    U: UniformSource + ?Sized,
{
    if r == 0 {
        return Err(Error::InvalidParameter("threat range r must be >= 1".into()));
    }
    let traps = (0..r as i64)
        .map(|j| trap_scan(env, u, w.offset(qi(j * h) * params.v_plus, j * h), h, params, cap))
        .collect::<Result<Vec<_>>>()?;
    let verdict = Truth::any(traps.iter().map(|t| t.verdict));
    Ok(ThreatReport { w, h, r, verdict, traps })
}

/// Decides threats at rounded points.
pub trait ThreatOracle {
    fn threatened(&self, w: RefPoint) -> Result<Truth>;
}

impl<F: Fn(RefPoint) -> Truth> ThreatOracle for F {
    fn threatened(&self, w: RefPoint) -> Result<Truth> {
        Ok(self(w))
    }
}

/// The simulated `(h L_{k1}, l_{k1})`-threat.
pub struct ScanOracle<'a, E: ?Sized, U: ?Sized> {
    pub env: &'a E,
    pub u: &'a U,
    pub h: i64,
    pub r: u32,
    pub params: &'a RenormParams,
    pub cap: u64,
}

impl<E: KernelField + ?Sized, U: UniformSource + ?Sized> ThreatOracle for ScanOracle<'_, E, U> {
    fn threatened(&self, w: RefPoint) -> Result<Truth> {
        Ok(threat_scan(self.env, self.u, w, self.h, self.r, self.params, self.cap)?.verdict)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCheckpoint {
    pub j: u64,
    pub tau: Option<u64>,
    pub position: Option<Site>,
    pub rounded: Option<Site>,
    pub verdict: Truth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub checkpoints: Vec<DensityCheckpoint>,
    pub threatened: u64,
    pub unknown: u64,
    pub total: u64,
    pub density: Ratio<u64>,
    pub unknown_fraction: Ratio<u64>,
}

/// Threatened density `D^y_{h,k}(w)`: the walk from `y` is stopped at the
/// heights `pi_2(w) + j h L_{k1+1}`, `j < L_k / L_{k1+1}`, and each stopping
/// point is rounded at scale `h L_{k1}` and tested for a threat.
#[allow(clippy::too_many_arguments)]
pub fn threatened_density<E, U, O>(
    env: &E,
    u: &U,
    y: Site,
    w: RefPoint,
    h: u64,
    k: usize,
    k1: usize,
    schedule: &ScaleSchedule,
    delta: Q,
    oracle: &O,
    cap: u64,
) -> Result<DensityReport>
where
    E: KernelField + ?Sized,
    U: UniformSource + ?Sized,
    O: ThreatOracle + ?Sized,
{
    if k <= k1 {
        return Err(Error::InvalidParameter(format!("need k > k1, got k = {k}, k1 = {k1}")));
    }
    let big_k = schedule.big_l(k)?;
    let hk = h.checked_mul(big_k).ok_or_else(|| Error::Overflow("h L_k".into()))?;
    if hk > DENSITY_COST_LIMIT {
        return Err(Error::CostGuard(format!("h L_k = {hk} exceeds {DENSITY_COST_LIMIT}")));
    }
    let hp = h_prime(hk) as i64;
    if y.y < w.y || y.y >= w.y + hp {
        return Err(Error::InvalidParameter(format!("start height {} outside [{}, {})", y.y, w.y, w.y + hp)));
    }
    let step_l = schedule.big_l(k1 + 1)?;
    if big_k % step_l != 0 {
        return Err(Error::InvalidState("L_{k1+1} does not divide L_k".into()));
    }
    let total = big_k / step_l;
    let step = (h * step_l) as i64;
    let round_h = (h * schedule.big_l(k1)?) as i64;
    let mut walk = Walk::new(y);
    let mut stuck = false;
    let mut checkpoints = Vec::with_capacity(total as usize);
    for j in 0..total {
        let mut cp = DensityCheckpoint { j, tau: None, position: None, rounded: None, verdict: Truth::Unknown };
        if !stuck {
            match run_until_height(&mut walk, env, u, j as i64 * step, w.y, cap) {
                Ok(run) if run.tau.is_some() => {
                    let z = walk.position();
                    let rounded = round_point(z, round_h, delta)?;
                    cp.tau = run.tau;
                    cp.position = Some(z);
                    cp.rounded = Some(rounded);
                    cp.verdict = oracle.threatened(RefPoint::from(rounded))?;
                }
                Ok(_) | Err(Error::WindowExceeded(_)) => stuck = true,
                Err(e) => return Err(e),
            }
        }
        checkpoints.push(cp);
    }
    let threatened = checkpoints.iter().filter(|c| c.verdict == Truth::True).count() as u64;
    let unknown = checkpoints.iter().filter(|c| c.verdict == Truth::Unknown).count() as u64;
    Ok(DensityReport {
        checkpoints,
        threatened,
        unknown,
        total,
        density: Ratio::new(threatened, total),
        unknown_fraction: Ratio::new(unknown, total),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RhoSequence {
    /// `rho_{k1}, rho_{k1+1}, ...`
    pub values: Vec<BigRational>,
    pub stays_above_half: bool,
    /// some ratio `l_k <= 1` was used
    pub divergent: bool,
}

/// `rho_{k1} = 1`, `rho_{k+1} = rho_k - 5 / l_k`.
pub fn rho_sequence(schedule: &ScaleSchedule, k1: usize, depth: usize) -> Result<RhoSequence> {
    let mut values = vec![BigRational::one()];
    let mut divergent = false;
    for k in k1..k1 + depth {
        let l = schedule.small_l_exact(k.min(schedule.depth()));
        if k > schedule.depth() {
            return Err(Error::InvalidParameter(format!("schedule depth {} is below {k}", schedule.depth())));
        }
        if *l <= num_bigint::BigUint::one() {
            divergent = true;
        }
        let next = values.last().unwrap() - BigRational::new(BigInt::from(5), BigInt::from(l.clone()));
        values.push(next);
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let stays_above_half = values.iter().all(|v| *v >= half);
    Ok(RhoSequence { values, stays_above_half, divergent })
}
