//! Monte Carlo estimators: direction exceedance curves, limiting directions,
//! decay fits, ballisticity calibration, traps, threats and densities.

mod traps;

use std::fmt::Write as _;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{run_until_height, UniformField, Walk};
use crate::env::{EnvironmentField, EnvironmentSpec, KernelField, Window};
use crate::error::{Error, Result};
use crate::geometry::{q, qi, BoxGeometry, RefPoint, Q};
use crate::rng;
use crate::stats::{linear_fit, mean_se, wilson, Z95};
use crate::Site;

pub use traps::{
    rho_sequence, threat_scan, threatened_density, trap_scan, BandProbe, DensityCheckpoint, DensityReport,
    RenormParams, RhoSequence, ScanOracle, ThreatOracle, ThreatReport, TrapCandidate, TrapReport, Truth,
    DENSITY_COST_LIMIT,
};

/// Exact direction `dx / H`.
pub type Slope = Ratio<i64>;

pub fn slope_to_q(s: Slope) -> Q {
    Q::new(*s.numer() as i128, *s.denom() as i128)
}

/// Which walks make up one sample of `A_H(v)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSet {
    /// every site of `I_H(o)`
    #[default]
    Box,
    /// the origin only
    Origin,
}

/// Grid `lo, lo + step, ..., <= hi` of exact slopes, in hundredths by default.
pub fn slope_grid(lo: Slope, hi: Slope, step: Slope) -> Result<Vec<Slope>> {
    if step <= Slope::zero() || hi < lo {
        return Err(Error::InvalidParameter("v-grid needs step > 0 and lo <= hi".into()));
    }
    let mut v = Vec::new();
    let mut x = lo;
    while x <= hi {
        v.push(x);
        x += step;
    }
    Ok(v)
}

/// Environment and coupling fields of sample `s`.
pub fn sample_fields(spec: &EnvironmentSpec, master: u64, s: u64, window: Window) -> Result<(EnvironmentField, UniformField)> {
    let env = spec.with_seed(rng::derive_seed(master, &[s as i64, 0])).build(window)?;
    let u = UniformField::new(rng::derive_seed(master, &[s as i64, 1]));
    Ok((env, u))
}

/// Window wide enough for walks started in `I_H(o)` that reach height `H`
/// without straying further than `3H` sideways.
pub fn sample_window(spec: &EnvironmentSpec, h: i64) -> Window {
    if matches!(spec.family, crate::env::Family::BooleanPercolation { .. }) {
        Window::new(-3 * h - 16..4 * h + 16, -h - 16..2 * h + 16)
    } else {
        Window::unbounded()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleDirections {
    pub max_v: Slope,
    pub min_v: Slope,
    /// direction of the walk started at the origin
    pub origin_v: Slope,
}

/// Directions of every start in one sample; `None` when some walk was
/// censored or left the window.
pub fn sample_directions<E, U>(env: &E, u: &U, h: i64, start: StartSet, cap: u64) -> Result<Option<SampleDirections>>
where
    E: KernelField + ?Sized,
    U: crate::coupling::UniformSource + ?Sized,
{
    let starts = match start {
        StartSet::Origin => vec![Site::ORIGIN],
        StartSet::Box => BoxGeometry::new(RefPoint::origin(), qi(h), Q::zero())?.start_box(),
    };
    let mut out: Option<SampleDirections> = None;
    for y in starts {
        let mut walk = Walk::new(y);
        let run = match run_until_height(&mut walk, env, u, h, 0, cap) {
            Ok(r) => r,
            Err(Error::WindowExceeded(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        if run.tau.is_none() {
            return Ok(None);
        }
        let v = Slope::new(walk.position().x - y.x, h);
        out = Some(match out {
            None => SampleDirections { max_v: v, min_v: v, origin_v: v },
            Some(d) => SampleDirections { max_v: d.max_v.max(v), min_v: d.min_v.min(v), ..d },
        });
        if y == Site::ORIGIN {
            out.as_mut().unwrap().origin_v = v;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionConfig {
    pub h: i64,
    pub v_grid: Vec<Slope>,
    pub samples: usize,
    pub cap: u64,
    #[serde(default)]
    pub start: StartSet,
    pub seed: u64,
}

/// Empirical `p_H(v)` and `p~_H(v)` on shared samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionStats {
    pub h: i64,
    pub v_grid: Vec<Slope>,
    pub samples: Vec<Option<SampleDirections>>,
    /// `#{samples with max V >= v}` per grid point
    pub exceed: Vec<u64>,
    /// `#{samples with min V <= v}` per grid point
    pub below: Vec<u64>,
    pub certified: u64,
    pub censored: u64,
}

impl DirectionStats {
    pub fn from_samples(h: i64, v_grid: Vec<Slope>, samples: Vec<Option<SampleDirections>>) -> Self {
        let ok: Vec<&SampleDirections> = samples.iter().flatten().collect();
        let exceed = v_grid.iter().map(|v| ok.iter().filter(|d| d.max_v >= *v).count() as u64).collect();
        let below = v_grid.iter().map(|v| ok.iter().filter(|d| d.min_v <= *v).count() as u64).collect();
        let certified = ok.len() as u64;
        let censored = samples.len() as u64 - certified;
        DirectionStats { h, v_grid, samples, exceed, below, certified, censored }
    }

    pub fn censoring_rate(&self) -> f64 {
        self.censored as f64 / self.samples.len().max(1) as f64
    }

    pub fn p_hat(&self, i: usize) -> f64 {
        self.exceed[i] as f64 / self.certified as f64
    }

    pub fn p_tilde(&self, i: usize) -> f64 {
        self.below[i] as f64 / self.certified as f64
    }

    /// `p^_H(v)` at an arbitrary exact slope.
    pub fn p_at(&self, v: Slope) -> f64 {
        let k = self.samples.iter().flatten().filter(|d| d.max_v >= v).count();
        k as f64 / self.certified as f64
    }

    pub fn count_at(&self, v: Slope) -> u64 {
        self.samples.iter().flatten().filter(|d| d.max_v >= v).count() as u64
    }

    /// `inf {v : p^_H(v) < theta}` over the reals: an order statistic of the
    /// per-sample maxima.
    pub fn v_plus_exact(&self, theta: f64) -> Option<Slope> {
        let mut m: Vec<Slope> = self.samples.iter().flatten().map(|d| d.max_v).collect();
        if m.is_empty() {
            return None;
        }
        m.sort_unstable_by(|a, b| b.cmp(a));
        Some(m[allowed_count(theta, m.len())])
    }

    /// `sup {v : p~_H(v) < theta}`.
    pub fn v_minus_exact(&self, theta: f64) -> Option<Slope> {
        let mut m: Vec<Slope> = self.samples.iter().flatten().map(|d| d.min_v).collect();
        if m.is_empty() {
            return None;
        }
        m.sort_unstable();
        Some(m[allowed_count(theta, m.len())])
    }

    /// Smallest grid point with `p^ < theta`.
    pub fn v_plus_grid(&self, theta: f64) -> Option<Slope> {
        (0..self.v_grid.len()).find(|&i| self.p_hat(i) < theta).map(|i| self.v_grid[i])
    }

    /// Largest grid point with `p~ < theta`.
    pub fn v_minus_grid(&self, theta: f64) -> Option<Slope> {
        (0..self.v_grid.len()).rev().find(|&i| self.p_tilde(i) < theta).map(|i| self.v_grid[i])
    }

    /// Mean direction of the origin walks and its standard error.
    pub fn origin_mean(&self) -> (f64, f64) {
        let v: Vec<f64> = self.samples.iter().flatten().map(|d| d.origin_v.to_f64().unwrap()).collect();
        mean_se(&v)
    }

    pub fn csv_rows(&self, out: &mut String) {
        for (i, v) in self.v_grid.iter().enumerate() {
            let (lo, hi) = wilson(self.exceed[i], self.certified, Z95);
            let (tlo, thi) = wilson(self.below[i], self.certified, Z95);
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
                self.h,
                v.to_f64().unwrap(),
                self.p_hat(i),
                lo,
                hi,
                self.p_tilde(i),
                tlo,
                thi,
                self.certified,
                self.censored
            );
        }
    }
}

pub const DIRECTION_CSV_HEADER: &str = "H,v,p_hat,p_lo,p_hi,p_tilde,pt_lo,pt_hi,certified,censored";

/// Largest count strictly below `theta n`.
fn allowed_count(theta: f64, n: usize) -> usize {
    ((theta * n as f64).ceil() as usize).saturating_sub(1).min(n - 1)
}

/// `estimate_pH`: exceedance curves from `samples` independently seeded
/// `(env, U)` pairs.
pub fn estimate_ph(spec: &EnvironmentSpec, cfg: &DirectionConfig) -> Result<DirectionStats> {
    if cfg.samples < 30 {
        return Err(Error::InvalidParameter(format!("need at least 30 samples, got {}", cfg.samples)));
    }
    if cfg.h < 1 {
        return Err(Error::InvalidParameter(format!("H = {} must be >= 1", cfg.h)));
    }
    let window = sample_window(spec, cfg.h);
    let samples = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|s| {
            let (env, u) = sample_fields(spec, cfg.seed, s, window.clone())?;
            sample_directions(&env, &u, cfg.h, cfg.start, cfg.cap)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DirectionStats::from_samples(cfg.h, cfg.v_grid.clone(), samples))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VpmConfig {
    pub h_list: Vec<i64>,
    pub v_grid: Vec<Slope>,
    pub theta: f64,
    pub samples: usize,
    pub cap: u64,
    #[serde(default)]
    pub start: StartSet,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingRow {
    pub h: i64,
    pub v_plus_exact: Option<Slope>,
    pub v_minus_exact: Option<Slope>,
    pub v_plus_grid: Option<Slope>,
    pub v_minus_grid: Option<Slope>,
    pub mean_v: f64,
    pub mean_v_se: f64,
    pub censoring_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VpmEstimate {
    pub v_minus: Slope,
    pub v_plus: Slope,
    /// mean origin direction at the largest H
    pub v_mean: f64,
    pub v_mean_se: f64,
    pub crossings: Vec<CrossingRow>,
    #[serde(skip)]
    pub stats: Vec<DirectionStats>,
}

/// `estimate_v_pm`: threshold crossings of `p^` and `p~` at every H; the
/// headline values come from the largest H.
pub fn estimate_v_pm(spec: &EnvironmentSpec, cfg: &VpmConfig) -> Result<VpmEstimate> {
    if !(cfg.theta > 0.0 && cfg.theta < 0.5) {
        return Err(Error::InvalidParameter(format!("theta = {} must lie in (0, 1/2)", cfg.theta)));
    }
    if cfg.h_list.is_empty() || cfg.h_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("H-list must be non-empty and increasing".into()));
    }
    let mut stats = Vec::new();
    let mut crossings = Vec::new();
    for &h in &cfg.h_list {
        let st = estimate_ph(
            spec,
            &DirectionConfig { h, v_grid: cfg.v_grid.clone(), samples: cfg.samples, cap: cfg.cap, start: cfg.start, seed: cfg.seed },
        )?;
        let (mean_v, mean_v_se) = st.origin_mean();
        crossings.push(CrossingRow {
            h,
            v_plus_exact: st.v_plus_exact(cfg.theta),
            v_minus_exact: st.v_minus_exact(cfg.theta),
            v_plus_grid: st.v_plus_grid(cfg.theta),
            v_minus_grid: st.v_minus_grid(cfg.theta),
            mean_v,
            mean_v_se,
            censoring_rate: st.censoring_rate(),
        });
        stats.push(st);
    }
    let last = crossings.last().unwrap().clone();
    let (v_minus, v_plus) = match (last.v_minus_exact, last.v_plus_exact) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::EstimationFailed(format!("every sample at H = {} was censored", last.h))),
    };
    Ok(VpmEstimate { v_minus, v_plus, v_mean: last.mean_v, v_mean_se: last.mean_v_se, crossings, stats })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `None` when every point is zero
    pub slope: Option<f64>,
    pub slope_ci: Option<(f64, f64)>,
    pub degenerate_zero: bool,
    /// points replaced by the rule-of-three bound `3/n`
    pub one_sided: Vec<bool>,
    pub benchmark: Option<f64>,
}

/// Least-squares slope of `log p` against `log H`. Zero counts become the
/// one-sided bound `3/n`; all-zero data is reported as degenerate.
pub fn fit_power_decay(hs: &[f64], counts: &[u64], ns: &[u64], alpha: Option<f64>) -> Result<DecayFit> {
    if hs.len() < 3 || hs.len() != counts.len() || hs.len() != ns.len() {
        return Err(Error::InvalidParameter("a decay fit needs at least 3 matched points".into()));
    }
    let benchmark = alpha.map(|a| -a / 4.0);
    let one_sided: Vec<bool> = counts.iter().map(|&k| k == 0).collect();
    if one_sided.iter().all(|&z| z) {
        return Ok(DecayFit { slope: None, slope_ci: None, degenerate_zero: true, one_sided, benchmark });
    }
    let ps: Vec<f64> = counts
        .iter()
        .zip(ns)
        .map(|(&k, &n)| if k == 0 { 3.0 / n as f64 } else { k as f64 / n as f64 })
        .collect();
    let mut fit = fit_power_decay_values(hs, &ps)?;
    fit.one_sided = one_sided;
    fit.benchmark = benchmark;
    Ok(fit)
}

/// Fit on exact values (no counts).
pub fn fit_power_decay_values(hs: &[f64], ps: &[f64]) -> Result<DecayFit> {
    if hs.len() < 3 || hs.len() != ps.len() || ps.iter().any(|&p| p <= 0.0) {
        return Err(Error::InvalidParameter("a decay fit needs at least 3 positive points".into()));
    }
    let x: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let y: Vec<f64> = ps.iter().map(|p| p.ln()).collect();
    let f = linear_fit(&x, &y);
    Ok(DecayFit {
        slope: Some(f.slope),
        slope_ci: Some((f.slope - Z95 * f.slope_se, f.slope + Z95 * f.slope_se)),
        degenerate_zero: false,
        one_sided: vec![false; hs.len()],
        benchmark: None,
    })
}

/// `deviation_fit`: decay of `p^_H(v+ + eps)` across the H-list.
pub fn deviation_fit(stats: &[DirectionStats], v_plus: Slope, eps: Slope, alpha: Option<f64>) -> Result<DecayFit> {
    if eps <= Slope::zero() {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let v = v_plus + eps;
    let hs: Vec<f64> = stats.iter().map(|s| s.h as f64).collect();
    let ks: Vec<u64> = stats.iter().map(|s| s.count_at(v)).collect();
    let ns: Vec<u64> = stats.iter().map(|s| s.certified).collect();
    fit_power_decay(&hs, &ks, &ns, alpha)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaCalibration {
    pub beta: Q,
    pub speed: f64,
    pub censored: u64,
}

/// `beta = 1.5 / speed`, rounded up to a multiple of 1/1000, where the speed
/// is `H / mean(tau_H)` over origin walks.
pub fn calibrate_beta(spec: &EnvironmentSpec, h: i64, samples: usize, cap: u64, seed: u64) -> Result<BetaCalibration> {
    let window = sample_window(spec, h);
    let taus = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let (env, u) = sample_fields(spec, seed, s, window.clone())?;
            let mut w = Walk::new(Site::ORIGIN);
            match run_until_height(&mut w, &env, &u, h, 0, cap) {
                Ok(r) => Ok(r.tau),
                Err(Error::WindowExceeded(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let ok: Vec<u64> = taus.iter().flatten().copied().collect();
    if ok.is_empty() {
        return Err(Error::EstimationFailed("every calibration walk was censored".into()));
    }
    let mean_tau = ok.iter().sum::<u64>() as f64 / ok.len() as f64;
    let speed = h as f64 / mean_tau;
    let milli = (1500.0 / speed).ceil() as i128;
    Ok(BetaCalibration { beta: q(milli, 1000), speed, censored: (taus.len() - ok.len()) as u64 })
}

/// Fraction of origin walks with `tau_H >= beta H`, per H.
pub fn tau_tail(spec: &EnvironmentSpec, beta: Q, h_list: &[i64], samples: usize, cap: u64, seed: u64) -> Result<Vec<(i64, f64)>> {
    h_list
        .iter()
        .map(|&h| {
            let window = sample_window(spec, h);
            let hits = (0..samples as u64)
                .into_par_iter()
                .map(|s| {
                    let (env, u) = sample_fields(spec, seed, s, window.clone())?;
                    let mut w = Walk::new(Site::ORIGIN);
                    let slow = match run_until_height(&mut w, &env, &u, h, 0, cap) {
                        Ok(r) => r.tau.is_none_or(|t| qi(t as i64) >= beta * qi(h)),
                        Err(Error::WindowExceeded(_)) => true,
                        Err(e) => return Err(e),
                    };
                    Ok(u64::from(slow))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((h, hits.iter().sum::<u64>() as f64 / samples as f64))
        })
        .collect()
}
