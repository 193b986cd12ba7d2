//! The coupled walks: uniform field, histories, the jump rule, hitting
//! times, the shift operator and cut lines.

use std::fmt::Write as _;

use num_rational::Ratio;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::env::KernelField;
use crate::error::{Error, Result};
use crate::geometry::{qi, Q};
use crate::kernel::Dir;
use crate::rng::{self, Tag};
use crate::Site;

/// Source of the coupling variables `U(x, i)`.
pub trait UniformSource: Sync {
    fn uniform(&self, x: Site, i: u64) -> f64;
}

impl<T: UniformSource + ?Sized> UniformSource for &T {
    fn uniform(&self, x: Site, i: u64) -> f64 {
        (**self).uniform(x, i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformField {
    pub seed: u64,
}

impl UniformField {
    pub fn new(seed: u64) -> Self {
        UniformField { seed }
    }
}

impl UniformSource for UniformField {
    #[inline]
    fn uniform(&self, x: Site, i: u64) -> f64 {
        rng::uniform(self.seed, Tag::Uniform, &[x.x, x.y, i as i64])
    }
}

/// Uniforms given by a closure.
pub struct FnUniforms<F>(pub F);

impl<F: Fn(Site, u64) -> f64 + Sync> UniformSource for FnUniforms<F> {
    fn uniform(&self, x: Site, i: u64) -> f64 {
        (self.0)(x, i)
    }
}

/// A uniform field with individual `(x, i)` entries overridden.
pub struct PatchedUniforms<U> {
    pub base: U,
    pub overrides: FxHashMap<(Site, u64), f64>,
}

impl<U: UniformSource> PatchedUniforms<U> {
    pub fn new(base: U) -> Self {
        PatchedUniforms { base, overrides: FxHashMap::default() }
    }

    pub fn set(&mut self, x: Site, i: u64, u: f64) -> &mut Self {
        self.overrides.insert((x, i), u);
        self
    }
}

impl<U: UniformSource> UniformSource for PatchedUniforms<U> {
    fn uniform(&self, x: Site, i: u64) -> f64 {
        self.overrides.get(&(x, i)).copied().unwrap_or_else(|| self.base.uniform(x, i))
    }
}

/// Finitely supported offset of the visit counters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<(Site, u64)>", into = "Vec<(Site, u64)>")]
pub struct History(FxHashMap<Site, u64>);

impl History {
    pub fn new() -> Self {
        History::default()
    }

    pub fn get(&self, x: Site) -> u64 {
        self.0.get(&x).copied().unwrap_or(0)
    }

    pub fn add(&mut self, x: Site, count: u64) {
        if count > 0 {
            *self.0.entry(x).or_insert(0) += count;
        }
    }

    pub fn support(&self) -> impl Iterator<Item = Site> + '_ {
        self.0.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Pointwise sum.
    pub fn plus(&self, other: &FxHashMap<Site, u64>) -> History {
        let mut h = self.clone();
        for (&x, &c) in other {
            h.add(x, c);
        }
        h
    }
}

impl FromIterator<(Site, u64)> for History {
    fn from_iter<T: IntoIterator<Item = (Site, u64)>>(iter: T) -> Self {
        let mut h = History::new();
        for (x, c) in iter {
            h.add(x, c);
        }
        h
    }
}

impl From<Vec<(Site, u64)>> for History {
    fn from(v: Vec<(Site, u64)>) -> Self {
        v.into_iter().collect()
    }
}

impl From<History> for Vec<(Site, u64)> {
    fn from(h: History) -> Self {
        let mut v: Vec<_> = h.0.into_iter().collect();
        v.sort_by_key(|(s, _)| (s.y, s.x));
        v
    }
}

/// Deliberate corruptions of the coupling, for negative controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingFault {
    /// the first visit to each site reads index `Gamma(x)` instead of
    /// `Gamma(x) + 1`, i.e. a variable no honest walk ever reads
    SkipFirstIncrement,
}

/// One consumed coupling variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Consumed {
    pub site: Site,
    pub index: u64,
    pub u: f64,
    pub dir: Dir,
}

/// Visited sites `Z_0..Z_n` and the variable consumed at each step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PathRecord {
    pub sites: Vec<Site>,
    pub consumed: Vec<Consumed>,
}

impl PathRecord {
    pub fn new(start: Site) -> Self {
        PathRecord { sites: vec![start], consumed: Vec::new() }
    }

    pub fn steps(&self) -> usize {
        self.consumed.len()
    }

    pub fn start(&self) -> Site {
        self.sites[0]
    }

    pub fn last(&self) -> Site {
        *self.sites.last().expect("paths are never empty")
    }

    /// Appends another record that starts where this one ends.
    pub fn extend(&mut self, other: &PathRecord) {
        debug_assert_eq!(self.last(), other.start());
        self.sites.extend_from_slice(&other.sites[1..]);
        self.consumed.extend_from_slice(&other.consumed);
    }

    /// Nearest-neighbour steps and strictly increasing indices per site.
    pub fn validate(&self) -> Result<()> {
        for (n, w) in self.sites.windows(2).enumerate() {
            if (w[0].x - w[1].x).abs() + (w[0].y - w[1].y).abs() != 1 {
                return Err(Error::InvalidState(format!("step {n} is not a unit step")));
            }
        }
        let mut last: FxHashMap<Site, u64> = FxHashMap::default();
        for (n, c) in self.consumed.iter().enumerate() {
            if c.site != self.sites[n] {
                return Err(Error::InvalidState(format!("step {n} consumed at the wrong site")));
            }
            if let Some(prev) = last.insert(c.site, c.index) {
                if c.index <= prev {
                    return Err(Error::InvalidState(format!("index at step {n} does not increase")));
                }
            }
        }
        Ok(())
    }

    /// One JSON object per step: `n`, `x`, `y` and the index consumed there
    /// (`null` at the final site).
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (n, s) in self.sites.iter().enumerate() {
            let idx = self.consumed.get(n).map(|c| c.index);
            let line = serde_json::json!({ "n": n, "x": s.x, "y": s.y, "index": idx });
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

/// Walk `Z^{y, Gamma}` over shared coupling variables.
#[derive(Clone, Debug)]
pub struct Walk {
    start: Site,
    history: History,
    pos: Site,
    counter: FxHashMap<Site, u64>,
    steps: u64,
    fault: Option<CouplingFault>,
}

impl Walk {
    pub fn new(start: Site) -> Self {
        Walk::with_history(start, History::new())
    }

    pub fn with_history(start: Site, history: History) -> Self {
        Walk { start, history, pos: start, counter: FxHashMap::default(), steps: 0, fault: None }
    }

    pub fn with_fault(mut self, fault: CouplingFault) -> Self {
        self.fault = Some(fault);
        self
    }

    pub fn start(&self) -> Site {
        self.start
    }

    pub fn position(&self) -> Site {
        self.pos
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    /// `N_n(x)`: visits to `x` among `Z_0..Z_{n-1}`.
    pub fn visits(&self, x: Site) -> u64 {
        self.counter.get(&x).copied().unwrap_or(0)
    }

    pub fn counter(&self) -> &FxHashMap<Site, u64> {
        &self.counter
    }

    /// One jump: consumes `U(Z_n, N_{n+1}(Z_n) + Gamma(Z_n))`.
    #[inline]
    pub fn step<E, U>(&mut self, env: &E, uniforms: &U) -> Result<Consumed>
    where
        E: KernelField + ?Sized,
        U: UniformSource + ?Sized,
    {
        let site = self.pos;
        let kernel = env.kernel(site)?;
        let visits = self.counter.entry(site).or_insert(0);
        *visits += 1;
        let mut index = *visits + self.history.get(site);
        if *visits == 1 && self.fault == Some(CouplingFault::SkipFirstIncrement) {
            index -= 1;
        }
        let u = uniforms.uniform(site, index);
        let dir = kernel.jump(u);
        let (dx, dy) = dir.offset();
        self.pos = Site::new(site.x + dx, site.y + dy);
        self.steps += 1;
        Ok(Consumed { site, index, u, dir })
    }

    /// `n` further steps, appended to a fresh record.
    pub fn run<E, U>(&mut self, env: &E, uniforms: &U, n: u64) -> Result<PathRecord>
    where
        E: KernelField + ?Sized,
        U: UniformSource + ?Sized,
    {
        let mut rec = PathRecord::new(self.pos);
        for _ in 0..n {
            let c = self.step(env, uniforms)?;
            rec.consumed.push(c);
            rec.sites.push(self.pos);
        }
        Ok(rec)
    }
}

/// Outcome of running a walk to a height; `tau == None` means censored.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightRun {
    pub tau: Option<u64>,
    pub path: PathRecord,
}

impl HeightRun {
    pub fn is_censored(&self) -> bool {
        self.tau.is_none()
    }
}

/// Runs until the height `base + h` is hit or `cap` further steps were made.
/// A walk already at or above the target stops immediately.
pub fn run_until_height<E, U>(walk: &mut Walk, env: &E, uniforms: &U, h: i64, base: i64, cap: u64) -> Result<HeightRun>
where
    E: KernelField + ?Sized,
    U: UniformSource + ?Sized,
{
    if h < 0 {
        return Err(Error::InvalidParameter(format!("H = {h} must be >= 0")));
    }
    if cap == 0 {
        return Err(Error::InvalidParameter("cap must be >= 1".into()));
    }
    let target = base + h;
    let mut path = PathRecord::new(walk.pos);
    if walk.pos.y >= target {
        return Ok(HeightRun { tau: Some(walk.steps), path });
    }
    for _ in 0..cap {
        let c = walk.step(env, uniforms)?;
        path.consumed.push(c);
        path.sites.push(walk.pos);
        if walk.pos.y == target {
            return Ok(HeightRun { tau: Some(walk.steps), path });
        }
    }
    Ok(HeightRun { tau: None, path })
}

/// The shifted walk started at `Z_tau` with history `Gamma + N_tau`.
pub fn theta_shift(walk: &Walk, run: &HeightRun) -> Result<Walk> {
    if run.tau.is_none() {
        return Err(Error::InvalidState("cannot shift a censored walk".into()));
    }
    Ok(Walk {
        start: walk.pos,
        history: walk.history.plus(&walk.counter),
        pos: walk.pos,
        counter: FxHashMap::default(),
        steps: 0,
        fault: walk.fault,
    })
}

/// Certified cut level relative to the start, and its first hitting step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutLine {
    pub level: Option<i64>,
    pub step: Option<usize>,
}

impl CutLine {
    pub fn is_certified(&self) -> bool {
        self.level.is_some()
    }

    /// `Xi >= h`, counting uncertified records as above every level.
    pub fn at_least(&self, h: i64) -> bool {
        self.level.is_none_or(|l| l >= h)
    }
}

/// Smallest relative level `a >= 0` that the record never goes strictly below
/// after first reaching it, provided the record ends at least `margin` above.
pub fn cut_line_estimate(path: &PathRecord, margin: i64) -> CutLine {
    let y0 = path.start().y;
    let rel: Vec<i64> = path.sites.iter().map(|s| s.y - y0).collect();
    let mut suffix_min = rel.clone();
    for n in (0..rel.len().saturating_sub(1)).rev() {
        suffix_min[n] = suffix_min[n].min(suffix_min[n + 1]);
    }
    let last = *rel.last().expect("paths are never empty");
    let mut first_hit = Vec::new();
    for (n, &h) in rel.iter().enumerate() {
        while h >= first_hit.len() as i64 {
            first_hit.push(n);
        }
    }
    for (a, &t) in first_hit.iter().enumerate() {
        let a = a as i64;
        if last < a + margin {
            break;
        }
        if suffix_min[t] >= a {
            return CutLine { level: Some(a), step: Some(t) };
        }
    }
    CutLine { level: None, step: None }
}

/// First index with `y == level`, or 0 when the record starts at or above it.
pub fn hitting_index(path: &PathRecord, level: i64) -> Option<usize> {
    if path.start().y >= level {
        return Some(0);
    }
    path.sites.iter().position(|s| s.y == level)
}

/// `E_H`: the record never drops below `pi_2(y) - H`.
pub fn event_e(path: &PathRecord, h: i64) -> bool {
    let floor = path.start().y - h;
    path.sites.iter().all(|s| s.y >= floor)
}

/// `D_H`: horizontal displacement at most `beta H` up to `tau_{H,y}`.
pub fn event_d(path: &PathRecord, h: i64, beta: Q) -> Result<bool> {
    let y = path.start();
    let tau = hitting_index(path, y.y + h)
        .ok_or_else(|| Error::InvalidState(format!("record never reaches relative height {h}")))?;
    let bound = beta * qi(h);
    Ok(path.sites[..=tau].iter().all(|s| qi((s.x - y.x).abs()) <= bound))
}

/// `V_{H,w} = (X_{tau_{H,w}} - pi_1(y)) / H`, exactly.
pub fn direction_v(path: &PathRecord, h: i64, base: i64) -> Result<Ratio<i64>> {
    if h <= 0 {
        return Err(Error::InvalidParameter(format!("direction needs H > 0, got {h}")));
    }
    let tau = hitting_index(path, base + h)
        .ok_or_else(|| Error::InvalidState(format!("record never reaches height {}", base + h)))?;
    Ok(Ratio::new(path.sites[tau].x - path.start().x, h))
}

/// Whether every `(site, index)` pair read by several walks saw the same value.
pub fn consumption_consistent(records: &[&PathRecord]) -> bool {
    let mut seen: FxHashMap<(Site, u64), u64> = FxHashMap::default();
    for r in records {
        for c in &r.consumed {
            if *seen.entry((c.site, c.index)).or_insert(c.u.to_bits()) != c.u.to_bits() {
                return false;
            }
        }
    }
    true
}
