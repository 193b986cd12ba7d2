//! Property suites behind `rwre verify`. Default configurations are the
//! acceptance sizes; every suite is deterministic in its seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{
    consumption_consistent, cut_line_estimate, event_e, run_until_height, theta_shift, CouplingFault, History,
    UniformField, Walk,
};
use crate::env::{
    drift_condition_check, empirical_mixing_covariance, BoxStatistic, EnvironmentSpec, Family, FactorRule, QTable,
    RadiusLaw, RowLaw, Window,
};
use crate::error::{Error, Result};
use crate::geometry::{h_prime, BoxPair, RealBox};
use crate::kernel::TransitionKernel;
use crate::path_algebra::{classify_barrier, loop_decompose, BarrierVerdict, LatticePath, Loop, Scenario};
use crate::rng::{self, Stream};
use crate::stats::{ks_uniform, lag1_test, linear_fit, wilson, Z95};
use crate::Site;

/// Outcome of one suite.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub lines: Vec<String>,
    pub details: serde_json::Value,
}

fn kernel(p: [f64; 4]) -> TransitionKernel {
    TransitionKernel::new(p).expect("built-in kernels are valid")
}

/// Two laterally opposed kernels with the same upward drift.
pub fn barrier_kernels() -> Vec<TransitionKernel> {
    vec![kernel([0.3, 0.1, 0.4, 0.2]), kernel([0.1, 0.3, 0.4, 0.2])]
}

/// One spec per environment family used by the barrier suite.
pub fn barrier_families() -> Vec<EnvironmentSpec> {
    let k = barrier_kernels();
    vec![
        EnvironmentSpec { family: Family::IidSite { weights: vec![0.5, 0.5] }, kernels: k.clone(), seed: 0 },
        EnvironmentSpec {
            family: Family::BooleanPercolation {
                intensity: 0.15,
                radius: RadiusLaw::Pareto { scale: 1.0, exponent: 6.0 },
                alpha: 3.0,
                radius_shift: 0.0,
            },
            kernels: k.clone(),
            seed: 0,
        },
        EnvironmentSpec {
            family: Family::FactorIid { radius: 1, rule: FactorRule::ThresholdMean { threshold: 0.5 } },
            kernels: k.clone(),
            seed: 0,
        },
        EnvironmentSpec { family: Family::Dynamic1d { law: RowLaw::Markov { p: 0.5, refresh: 0.3 } }, kernels: k, seed: 0 },
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierSuiteConfig {
    pub trials: usize,
    pub h_max: i64,
    pub cap: u64,
    pub seed: u64,
    /// corrupts the left walk's coupling when set
    pub fault: Option<CouplingFault>,
}

impl Default for BarrierSuiteConfig {
    fn default() -> Self {
        BarrierSuiteConfig { trials: 10_000, h_max: 64, cap: 200_000, seed: 2024, fault: None }
    }
}

/// Replayable record of one barrier trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierTrial {
    pub trial: u64,
    pub attempt: u64,
    pub family: String,
    pub env_seed: u64,
    pub u_seed: u64,
    pub h: i64,
    pub x0: Site,
    pub x0_prime: Site,
    pub history: History,
    pub verdict: BarrierVerdict,
}

const MAX_ATTEMPTS: u64 = 1000;

/// Samples and classifies trial `trial`. Draws whose walks are censored,
/// leave the window, or whose history meets the right path are redrawn; the
/// returned count says how many were discarded.
pub fn barrier_trial(
    families: &[EnvironmentSpec],
    master: u64,
    trial: u64,
    h_max: i64,
    cap: u64,
    fault: Option<CouplingFault>,
) -> Result<(BarrierTrial, u64)> {
    if h_max < 2 {
        return Err(Error::InvalidParameter("barrier trials need h_max >= 2".into()));
    }
    let spec = &families[trial as usize % families.len()];
    for attempt in 0..MAX_ATTEMPTS {
        let mut s = Stream::new(rng::derive_seed(master, &[trial as i64, attempt as i64]), 0);
        let env_seed = s.next_u64();
        let u_seed = s.next_u64();
        let h = s.range(2, h_max + 1);
        let x0 = Site::ORIGIN;
        let dy = s.range(-3, 3.min(h - 1) + 1);
        let x1 = Site::new(s.range(1, 5), dy);
        let mut history = History::new();
        if s.next_f64() < 0.5 {
            // rows strictly below both starts, one row of clearance
            let top = x0.y.min(x1.y) - 1;
            for _ in 0..s.range(1, 7) {
                let site = Site::new(s.range(-4, x1.x + 5), s.range(top - 3, top));
                history.add(site, s.range(1, 4) as u64);
            }
        }
        let verdict = match classify_draw(spec, env_seed, u_seed, h, x0, x1, &history, cap, fault)? {
            Some(v) => v,
            None => continue,
        };
        let record = BarrierTrial {
            trial,
            attempt,
            family: spec.family.name().to_string(),
            env_seed,
            u_seed,
            h,
            x0,
            x0_prime: x1,
            history,
            verdict,
        };
        return Ok((record, attempt));
    }
    Err(Error::EstimationFailed(format!("trial {trial}: no valid draw in {MAX_ATTEMPTS} attempts")))
}

/// Runs both walks of one fully specified draw. `None` means the draw is
/// unusable: a walk was censored or left the window, or the history meets
/// the right path.
#[allow(clippy::too_many_arguments)]
pub fn classify_draw(
    spec: &EnvironmentSpec,
    env_seed: u64,
    u_seed: u64,
    h: i64,
    x0: Site,
    x1: Site,
    history: &History,
    cap: u64,
    fault: Option<CouplingFault>,
) -> Result<Option<BarrierVerdict>> {
    let window = if matches!(spec.family, Family::BooleanPercolation { .. }) {
        Window::new(-3 * h - 24..3 * h + 28, -h - 24..2 * h + 24)
    } else {
        Window::unbounded()
    };
    let env = spec.with_seed(env_seed).build(window)?;
    let u = UniformField::new(u_seed);
    let mut left = Walk::with_history(x0, history.clone());
    if let Some(f) = fault {
        left = left.with_fault(f);
    }
    let mut right = Walk::new(x1);
    let runs = run_until_height(&mut left, &env, &u, h, x0.y, cap)
        .and_then(|l| run_until_height(&mut right, &env, &u, h, x0.y, cap).map(|r| (l, r)));
    let (lrun, rrun) = match runs {
        Ok(pair) => pair,
        Err(Error::WindowExceeded(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    if lrun.is_censored() || rrun.is_censored() {
        return Ok(None);
    }
    match classify_barrier(&lrun.path, history, &rrun.path, h) {
        Ok(v) => Ok(Some(v)),
        Err(Error::InvalidConfiguration(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Re-runs a recorded trial from its seeds.
pub fn replay_barrier_trial(families: &[EnvironmentSpec], t: &BarrierTrial, cap: u64, fault: Option<CouplingFault>) -> Result<Option<BarrierVerdict>> {
    let spec = families
        .iter()
        .find(|f| f.family.name() == t.family)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown family {}", t.family)))?;
    classify_draw(spec, t.env_seed, t.u_seed, t.h, t.x0, t.x0_prime, &t.history, cap, fault)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCounts {
    pub s1: u64,
    pub s2: u64,
    pub s3: u64,
    pub violation: u64,
}

impl ScenarioCounts {
    fn add(&mut self, s: Scenario) {
        match s {
            Scenario::S1LeftWalkPassesBelow => self.s1 += 1,
            Scenario::S2RightWalkPassesBelow => self.s2 += 1,
            Scenario::S3OrderPreserved => self.s3 += 1,
            Scenario::Violation => self.violation += 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BarrierSuiteResult {
    pub per_family: Vec<(String, ScenarioCounts)>,
    pub total: ScenarioCounts,
    pub redrawn: u64,
    pub trials: Vec<BarrierTrial>,
}

impl BarrierSuiteResult {
    pub fn verdicts_jsonl(&self) -> String {
        self.trials.iter().map(|t| serde_json::to_string(t).unwrap() + "\n").collect()
    }
}

pub fn barrier_run(families: &[EnvironmentSpec], cfg: &BarrierSuiteConfig) -> Result<BarrierSuiteResult> {
    let out = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| barrier_trial(families, cfg.seed, t, cfg.h_max, cfg.cap, cfg.fault))
        .collect::<Result<Vec<_>>>()?;
    let mut per: Vec<(String, ScenarioCounts)> =
        families.iter().map(|f| (f.family.name().to_string(), ScenarioCounts::default())).collect();
    let mut total = ScenarioCounts::default();
    let mut redrawn = 0;
    let mut trials = Vec::with_capacity(out.len());
    for (rec, skipped) in out {
        per[rec.trial as usize % families.len()].1.add(rec.verdict.scenario);
        total.add(rec.verdict.scenario);
        redrawn += skipped;
        trials.push(rec);
    }
    Ok(BarrierSuiteResult { per_family: per, total, redrawn, trials })
}

pub fn barrier_suite(cfg: &BarrierSuiteConfig) -> Result<SuiteReport> {
    let res = barrier_run(&barrier_families(), cfg)?;
    Ok(barrier_report(cfg, &res))
}

pub fn barrier_report(cfg: &BarrierSuiteConfig, res: &BarrierSuiteResult) -> SuiteReport {
    let mut lines = Vec::new();
    for (name, c) in &res.per_family {
        lines.push(format!("{name}: S1 {} S2 {} S3 {} violations {}", c.s1, c.s2, c.s3, c.violation));
    }
    lines.push(format!("{} trials, {} redrawn draws, {} violations", cfg.trials, res.redrawn, res.total.violation));
    SuiteReport {
        suite: "barrier".into(),
        passed: res.total.violation == 0,
        lines,
        details: serde_json::json!({ "per_family": res.per_family, "redrawn": res.redrawn, "fault": cfg.fault }),
    }
}

/// Brute-force reference: repeatedly find the first index whose site already
/// occurs earlier among the surviving indices and delete the cycle.
pub fn naive_loop_erasure(sites: &[Site]) -> (Vec<Loop>, Vec<usize>) {
    let mut alive: Vec<usize> = (0..sites.len()).collect();
    let mut loops = Vec::new();
    'outer: loop {
        for q in 0..alive.len() {
            for p in 0..q {
                if sites[alive[p]] == sites[alive[q]] {
                    let indices: Vec<usize> = alive.drain(p..q).collect();
                    let t_out = alive[p];
                    let ls = indices.iter().map(|&i| sites[i]).collect();
                    loops.push(Loop { t_in: indices[0], t_out, indices, sites: ls });
                    continue 'outer;
                }
            }
        }
        return (loops, alive);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopSuiteConfig {
    pub max_len: usize,
    pub side: i64,
    pub random_paths: usize,
    pub random_max_len: usize,
    pub seed: u64,
}

impl Default for LoopSuiteConfig {
    fn default() -> Self {
        LoopSuiteConfig { max_len: 12, side: 5, random_paths: 100_000, random_max_len: 200, seed: 7 }
    }
}

fn loop_case_ok(sites: &[Site]) -> bool {
    let path = LatticePath::new(sites.to_vec()).expect("enumerated paths are nearest-neighbour");
    let d = loop_decompose(&path);
    let (loops, residual) = naive_loop_erasure(sites);
    d.loops == loops && d.residual == residual && d.check(&path).is_ok()
}

/// Every nearest-neighbour path with at most `max_len` steps (so at most
/// `max_len + 1` sites) inside the
/// `side x side` window, visited depth-first.
pub fn for_each_window_path(side: i64, max_len: usize, mut f: impl FnMut(&[Site])) {
    fn rec(side: i64, max_len: usize, path: &mut Vec<Site>, f: &mut dyn FnMut(&[Site])) {
        f(path);
        if path.len() > max_len {
            return;
        }
        let last = *path.last().unwrap();
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let n = last.shifted(dx, dy);
            if (0..side).contains(&n.x) && (0..side).contains(&n.y) {
                path.push(n);
                rec(side, max_len, path, f);
                path.pop();
            }
        }
    }
    let mut path = Vec::with_capacity(max_len + 1);
    for y in 0..side {
        for x in 0..side {
            path.push(Site::new(x, y));
            rec(side, max_len, &mut path, &mut f);
            path.pop();
        }
    }
}

/// Simple random walk path of `len` steps.
pub fn random_path(seed: u64, idx: u64, len: usize) -> Vec<Site> {
    let mut s = Stream::new(seed, idx as i64);
    let mut p = vec![Site::ORIGIN];
    for _ in 0..len {
        let (dx, dy) = [(1, 0), (-1, 0), (0, 1), (0, -1)][s.range(0, 4) as usize];
        let last = *p.last().unwrap();
        p.push(last.shifted(dx, dy));
    }
    p
}

pub fn loops_suite(cfg: &LoopSuiteConfig) -> Result<SuiteReport> {
    let mut exhaustive = 0u64;
    let mut mismatches = 0u64;
    for_each_window_path(cfg.side, cfg.max_len, |p| {
        exhaustive += 1;
        mismatches += u64::from(!loop_case_ok(p));
    });
    let random_bad: u64 = (0..cfg.random_paths as u64)
        .into_par_iter()
        .map(|i| {
            let len = Stream::new(cfg.seed, -(i as i64) - 1).range(0, cfg.random_max_len as i64 + 1) as usize;
            u64::from(!loop_case_ok(&random_path(cfg.seed, i, len)))
        })
        .sum();
    let passed = mismatches == 0 && random_bad == 0;
    Ok(SuiteReport {
        suite: "loops".into(),
        passed,
        lines: vec![
            format!("exhaustive: {exhaustive} paths, {mismatches} mismatches"),
            format!("random: {} paths, {random_bad} mismatches", cfg.random_paths),
        ],
        details: serde_json::json!({ "exhaustive": exhaustive, "mismatches": mismatches, "random_mismatches": random_bad }),
    })
}

/// Environment used by the stream and shift suites: two kernels, one with
/// strong lateral bias, so walks revisit sites often.
pub fn revisiting_spec() -> EnvironmentSpec {
    EnvironmentSpec {
        family: Family::IidSite { weights: vec![0.5, 0.5] },
        kernels: vec![kernel([0.25, 0.25, 0.25, 0.25]), kernel([0.4, 0.1, 0.3, 0.2])],
        seed: 0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniformSuiteConfig {
    pub walks: usize,
    pub steps: u64,
    pub alpha: f64,
    pub max_rejections: usize,
    pub seed: u64,
}

impl Default for UniformSuiteConfig {
    fn default() -> Self {
        UniformSuiteConfig { walks: 100, steps: 10_000, alpha: 0.01, max_rejections: 4, seed: 99 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniformSuiteResult {
    pub ks_p: Vec<f64>,
    pub lag_p: Vec<f64>,
    pub ks_rejections: usize,
    pub lag_rejections: usize,
    pub consistent: bool,
}

pub fn uniforms_run(cfg: &UniformSuiteConfig) -> Result<UniformSuiteResult> {
    let spec = revisiting_spec();
    let per = (0..cfg.walks as u64)
        .into_par_iter()
        .map(|i| {
            let env = spec.with_seed(rng::derive_seed(cfg.seed, &[i as i64, 0])).build(Window::unbounded())?;
            let u = UniformField::new(rng::derive_seed(cfg.seed, &[i as i64, 1]));
            let mut w = Walk::new(Site::ORIGIN);
            let rec = w.run(&env, &u, cfg.steps)?;
            let us: Vec<f64> = rec.consumed.iter().map(|c| c.u).collect();
            // a second walk on the same fields must agree wherever both read
            let mut other = Walk::new(Site::new(1, 0));
            let rec2 = other.run(&env, &u, cfg.steps / 10)?;
            Ok((ks_uniform(&us).p_value, lag1_test(&us).p_value, consumption_consistent(&[&rec, &rec2])))
        })
        .collect::<Result<Vec<_>>>()?;
    let ks_p: Vec<f64> = per.iter().map(|t| t.0).collect();
    let lag_p: Vec<f64> = per.iter().map(|t| t.1).collect();
    Ok(UniformSuiteResult {
        ks_rejections: ks_p.iter().filter(|&&p| p < cfg.alpha).count(),
        lag_rejections: lag_p.iter().filter(|&&p| p < cfg.alpha).count(),
        consistent: per.iter().all(|t| t.2),
        ks_p,
        lag_p,
    })
}

pub fn uniforms_suite(cfg: &UniformSuiteConfig) -> Result<SuiteReport> {
    let r = uniforms_run(cfg)?;
    let passed = r.ks_rejections <= cfg.max_rejections && r.lag_rejections <= cfg.max_rejections && r.consistent;
    Ok(SuiteReport {
        suite: "uniforms".into(),
        passed,
        lines: vec![
            format!("KS rejections at {}: {} of {}", cfg.alpha, r.ks_rejections, cfg.walks),
            format!("lag-1 rejections at {}: {} of {}", cfg.alpha, r.lag_rejections, cfg.walks),
            format!("shared reads consistent: {}", r.consistent),
        ],
        details: serde_json::json!({ "ks_rejections": r.ks_rejections, "lag_rejections": r.lag_rejections }),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThetaSuiteConfig {
    pub walks: usize,
    pub future: u64,
    pub cap: u64,
    pub seed: u64,
}

impl Default for ThetaSuiteConfig {
    fn default() -> Self {
        ThetaSuiteConfig { walks: 1000, future: 500, cap: 100_000, seed: 31 }
    }
}

/// Number of walks whose shifted continuation differs from the original
/// future, site by site or index by index.
pub fn theta_mismatches(cfg: &ThetaSuiteConfig) -> Result<(u64, u64)> {
    let spec = revisiting_spec();
    let per = (0..cfg.walks as u64)
        .into_par_iter()
        .map(|i| {
            let mut s = Stream::new(cfg.seed, i as i64);
            let env = spec.with_seed(s.next_u64()).build(Window::unbounded())?;
            let u = UniformField::new(s.next_u64());
            let start = Site::new(s.range(-5, 6), s.range(-5, 6));
            let mut gamma = History::new();
            for _ in 0..s.range(0, 8) {
                gamma.add(start.shifted(s.range(-3, 4), s.range(-3, 4)), s.range(1, 4) as u64);
            }
            let h = s.range(0, 12);
            let mut walk = Walk::with_history(start, gamma);
            let run = run_until_height(&mut walk, &env, &u, h, start.y, cfg.cap)?;
            if run.is_censored() {
                return Ok((0u64, 1u64));
            }
            let mut shifted = theta_shift(&walk, &run)?;
            let a = walk.run(&env, &u, cfg.future)?;
            let b = shifted.run(&env, &u, cfg.future)?;
            let same = a.sites == b.sites
                && a.consumed.iter().zip(&b.consumed).all(|(x, y)| x.site == y.site && x.index == y.index);
            Ok((u64::from(!same), 0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((per.iter().map(|p| p.0).sum(), per.iter().map(|p| p.1).sum()))
}

pub fn theta_suite(cfg: &ThetaSuiteConfig) -> Result<SuiteReport> {
    let (bad, censored) = theta_mismatches(cfg)?;
    Ok(SuiteReport {
        suite: "theta".into(),
        passed: bad == 0,
        lines: vec![format!("{} walks, {bad} mismatches, {censored} censored", cfg.walks)],
        details: serde_json::json!({ "mismatches": bad, "censored": censored }),
    })
}

/// Two-state environment whose every site steps north with probability 0.6.
/// Most sites never step sideways, which keeps backtracking likely enough
/// that `P(not E_16)` is visible at `n = 10^4`.
pub fn drift_spec() -> EnvironmentSpec {
    EnvironmentSpec {
        family: Family::IidSite { weights: vec![0.9, 0.1] },
        kernels: vec![kernel([0.0, 0.0, 0.6, 0.4]), kernel([0.05, 0.05, 0.6, 0.3])],
        seed: 0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssumptionSuiteConfig {
    pub zeta: f64,
    pub h_list: Vec<i64>,
    pub samples: usize,
    pub cap: u64,
    pub seed: u64,
}

impl Default for AssumptionSuiteConfig {
    fn default() -> Self {
        AssumptionSuiteConfig { zeta: 0.1, h_list: vec![4, 8, 16, 32], samples: 10_000, cap: 1_000_000, seed: 5 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssumptionRow {
    pub h: i64,
    pub xi_at_least: u64,
    pub xi_ci: (f64, f64),
    pub not_e: u64,
    pub not_e_ci: (f64, f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssumptionResult {
    pub drift_ok: bool,
    pub margin: i64,
    pub samples: usize,
    pub censored: u64,
    pub rows: Vec<AssumptionRow>,
    pub xi_strictly_decreasing: bool,
    pub not_e_strictly_decreasing: bool,
    /// slope of `log P(Xi >= H)` against `H`
    pub xi_log_slope: f64,
}

fn strictly_decreasing(v: &[u64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Empirical `P(Xi >= H)` and `P(not E_H)` over one record per sample. The
/// records run to `max H + m` with the certification margin `m = 2 H'`.
pub fn assumptions_run(spec: &EnvironmentSpec, cfg: &AssumptionSuiteConfig) -> Result<AssumptionResult> {
    let probe = spec.with_seed(cfg.seed).build(Window::around(Site::ORIGIN, 64))?;
    let drift_ok = drift_condition_check(&probe, cfg.zeta, Window::around(Site::ORIGIN, 64).sites())?;
    let h_max = *cfg.h_list.iter().max().ok_or_else(|| Error::InvalidParameter("empty H-list".into()))?;
    let margin = 2 * h_prime(h_max as u64) as i64;
    let recs = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|s| {
            let env = spec.with_seed(rng::derive_seed(cfg.seed, &[s as i64, 0])).build(Window::unbounded())?;
            let u = UniformField::new(rng::derive_seed(cfg.seed, &[s as i64, 1]));
            let mut w = Walk::new(Site::ORIGIN);
            let run = run_until_height(&mut w, &env, &u, h_max + margin, 0, cfg.cap)?;
            let cut = cut_line_estimate(&run.path, margin);
            let xi: Vec<bool> = cfg.h_list.iter().map(|&h| cut.at_least(h)).collect();
            let ne: Vec<bool> = cfg.h_list.iter().map(|&h| !event_e(&run.path, h)).collect();
            Ok((xi, ne, run.is_censored()))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = cfg.samples as u64;
    let mut rows = Vec::new();
    for (i, &h) in cfg.h_list.iter().enumerate() {
        let xi = recs.iter().filter(|r| r.0[i]).count() as u64;
        let ne = recs.iter().filter(|r| r.1[i]).count() as u64;
        rows.push(AssumptionRow { h, xi_at_least: xi, xi_ci: wilson(xi, n, Z95), not_e: ne, not_e_ci: wilson(ne, n, Z95) });
    }
    let xs: Vec<u64> = rows.iter().map(|r| r.xi_at_least).collect();
    let es: Vec<u64> = rows.iter().map(|r| r.not_e).collect();
    let positive: Vec<&AssumptionRow> = rows.iter().filter(|r| r.xi_at_least > 0).collect();
    let xi_log_slope = if positive.len() >= 2 {
        let hx: Vec<f64> = positive.iter().map(|r| r.h as f64).collect();
        let ly: Vec<f64> = positive.iter().map(|r| (r.xi_at_least as f64 / n as f64).ln()).collect();
        linear_fit(&hx, &ly).slope
    } else {
        f64::NAN
    };
    Ok(AssumptionResult {
        drift_ok,
        margin,
        samples: cfg.samples,
        censored: recs.iter().filter(|r| r.2).count() as u64,
        xi_strictly_decreasing: strictly_decreasing(&xs),
        not_e_strictly_decreasing: strictly_decreasing(&es),
        xi_log_slope,
        rows,
    })
}

pub fn assumptions_suite(cfg: &AssumptionSuiteConfig) -> Result<SuiteReport> {
    let r = assumptions_run(&drift_spec(), cfg)?;
    let mut lines = vec![format!("drift condition with zeta = {}: {}", cfg.zeta, r.drift_ok)];
    for row in &r.rows {
        lines.push(format!(
            "H = {:>3}: P(Xi >= H) = {:.4} [{:.4}, {:.4}], P(not E_H) = {:.4} [{:.4}, {:.4}]",
            row.h,
            row.xi_at_least as f64 / r.samples as f64,
            row.xi_ci.0,
            row.xi_ci.1,
            row.not_e as f64 / r.samples as f64,
            row.not_e_ci.0,
            row.not_e_ci.1
        ));
    }
    lines.push(format!("log-linear slope of P(Xi >= H): {:.4}", r.xi_log_slope));
    let passed = r.drift_ok && r.xi_strictly_decreasing && r.not_e_strictly_decreasing && r.xi_log_slope < 0.0;
    Ok(SuiteReport {
        suite: "assumptions".into(),
        passed,
        lines,
        details: serde_json::to_value(&r).unwrap_or_default(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixingSuiteConfig {
    pub samples: usize,
    pub gaussian_radius: i64,
    pub separations: Vec<i64>,
    pub seed: u64,
}

impl Default for MixingSuiteConfig {
    fn default() -> Self {
        MixingSuiteConfig { samples: 10_000, gaussian_radius: 6, separations: vec![4, 8, 16], seed: 17 }
    }
}

/// Unit boxes around `(0,0)` and `(0, h+1)`, whose separation is exactly `h`.
pub fn site_pair(h: i64) -> BoxPair {
    let b = RealBox::new(0.0, 1.0, 0.0, 1.0).unwrap();
    let bp = RealBox::new(0.0, 1.0, (h + 1) as f64, (h + 2) as f64).unwrap();
    BoxPair::new(b, bp).unwrap()
}

/// Box pairs and statistics tested on the i.i.d. environment.
pub fn iid_mixing_cases() -> Vec<(BoxPair, BoxStatistic, BoxStatistic)> {
    let wide = |a2: f64| RealBox::new(-2.0, 3.0, a2, a2 + 2.0).unwrap();
    vec![
        (site_pair(1), BoxStatistic::SiteIs { dx: 0, dy: 0, state: 1 }, BoxStatistic::SiteIs { dx: 0, dy: 0, state: 1 }),
        (site_pair(4), BoxStatistic::SiteIs { dx: 0, dy: 0, state: 0 }, BoxStatistic::SiteIs { dx: 0, dy: 0, state: 1 }),
        (
            BoxPair::new(wide(0.0), wide(3.0)).unwrap(),
            BoxStatistic::CountAtLeast { state: 1, count: 5 },
            BoxStatistic::CountAtLeast { state: 0, count: 5 },
        ),
        (
            BoxPair::new(wide(0.0), wide(10.0)).unwrap(),
            BoxStatistic::CountAtLeast { state: 1, count: 6 },
            BoxStatistic::CountAtLeast { state: 1, count: 4 },
        ),
    ]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixingResult {
    pub iid: Vec<(f64, f64, f64)>,
    pub iid_bound: f64,
    pub gaussian: Vec<(i64, f64, f64)>,
    pub iid_ok: bool,
    pub gaussian_non_increasing: bool,
}

pub fn mixing_run(cfg: &MixingSuiteConfig) -> Result<MixingResult> {
    let iid = EnvironmentSpec {
        family: Family::IidSite { weights: vec![0.5, 0.5] },
        kernels: barrier_kernels(),
        seed: 0,
    };
    let bound = 4.0 / (cfg.samples as f64).sqrt();
    let mut iid_rows = Vec::new();
    for (i, (pair, f1, f2)) in iid_mixing_cases().into_iter().enumerate() {
        let est = empirical_mixing_covariance(&iid, &pair, &f1, &f2, cfg.samples, rng::derive_seed(cfg.seed, &[i as i64]))?;
        iid_rows.push((est.sep, est.cov, est.std_error));
    }
    let gauss = EnvironmentSpec {
        family: Family::GaussianSign { q: QTable::uniform_ball(cfg.gaussian_radius), decay: 0.0 },
        kernels: barrier_kernels(),
        seed: 0,
    };
    let plus = BoxStatistic::SiteIs { dx: 0, dy: 0, state: 1 };
    let mut g_rows = Vec::new();
    for &h in &cfg.separations {
        let est = empirical_mixing_covariance(&gauss, &site_pair(h), &plus, &plus, cfg.samples, rng::derive_seed(cfg.seed, &[-1]))?;
        g_rows.push((h, est.cov, est.std_error));
    }
    Ok(MixingResult {
        iid_ok: iid_rows.iter().all(|r| r.1.abs() <= bound),
        gaussian_non_increasing: g_rows.windows(2).all(|w| w[1].1 <= w[0].1),
        iid: iid_rows,
        iid_bound: bound,
        gaussian: g_rows,
    })
}

pub fn mixing_suite(cfg: &MixingSuiteConfig) -> Result<SuiteReport> {
    let r = mixing_run(cfg)?;
    let mut lines = Vec::new();
    for (sep, cov, se) in &r.iid {
        lines.push(format!("iid sep {sep}: cov {cov:+.5} (se {se:.5}, bound {:.5})", r.iid_bound));
    }
    for (h, cov, se) in &r.gaussian {
        lines.push(format!("gaussian sign sep {h}: cov {cov:+.5} (se {se:.5})"));
    }
    Ok(SuiteReport {
        suite: "mixing".into(),
        passed: r.iid_ok && r.gaussian_non_increasing,
        lines,
        details: serde_json::to_value(&r).unwrap_or_default(),
    })
}

/// Lookup used by the command line.
pub fn suite_names() -> &'static [&'static str] {
    &["barrier", "loops", "uniforms", "theta", "assumptions", "mixing"]
}
