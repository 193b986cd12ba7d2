//! Experiment configs, run manifests and the command implementations behind
//! the `rwre` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coupling::{run_until_height, Walk};
use crate::env::{empirical_mixing_covariance, BoxStatistic, EnvironmentSpec, Family, Window};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_v_pm, sample_fields, sample_window, slope_grid, threat_scan, threatened_density, trap_scan,
    RenormParams, ScanOracle, Slope, StartSet, Truth, VpmConfig, DIRECTION_CSV_HEADER,
};
use crate::geometry::{ceil_i64, BoxPair, RealBox, RefPoint, ScaleSchedule, Q};
use crate::rng;
use crate::verify::{
    self, AssumptionSuiteConfig, BarrierSuiteConfig, LoopSuiteConfig, MixingSuiteConfig, SuiteReport,
    ThetaSuiteConfig, UniformSuiteConfig,
};
use crate::Site;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
pub const DEFAULT_CAP: u64 = 1_000_000;

fn default_cap() -> u64 {
    DEFAULT_CAP
}

/// A complete, serializable description of one run. Fractions (directions,
/// `beta`, `delta`) are written as strings such as `"-3/10"` or `"1"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// master seed; omitted means 0, or the built-in suite seeds for `verify`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_cap")]
    pub cap: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvironmentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<DirectionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renorm: Option<RenormSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap: Option<TrapSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threat: Option<ThreatSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing: Option<MixingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub walks: usize,
    /// relative target height; each walk runs until `pi_2(start) + h`
    pub h: i64,
    #[serde(default)]
    pub start: [i64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionSection {
    pub h_list: Vec<i64>,
    pub v_min: String,
    pub v_max: String,
    pub v_step: String,
    #[serde(default = "default_theta")]
    pub theta: f64,
    pub samples: usize,
    #[serde(default)]
    pub start: StartSet,
}

fn default_theta() -> f64 {
    0.05
}

/// Shared parameters of the trap, threat and density scans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenormSection {
    pub beta: String,
    pub v_minus: String,
    pub v_plus: String,
    /// overrides `(v+ - v-) / (5 (beta + 1))`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<String>,
    #[serde(default = "default_l0")]
    pub l0: u64,
    #[serde(default = "default_depth")]
    pub depth: usize,
}

fn default_l0() -> u64 {
    10_000_000_000
}

fn default_depth() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub h: i64,
    /// reference points `[x, y]`
    pub points: Vec<[i64; 2]>,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreatSection {
    pub h: i64,
    pub r: u32,
    pub points: Vec<[i64; 2]>,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    pub h: u64,
    pub k: usize,
    pub k1: usize,
    pub samples: usize,
    #[serde(default)]
    pub start: [i64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingSection {
    pub width: u32,
    pub height: u32,
    pub separations: Vec<i64>,
    pub f1: BoxStatistic,
    pub f2: BoxStatistic,
    pub samples: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barrier: Option<BarrierSuiteConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loops: Option<LoopSuiteConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniforms: Option<UniformSuiteConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaSuiteConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumptions: Option<AssumptionSuiteConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing: Option<MixingSuiteConfig>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

pub fn parse_slope(s: &str) -> Result<Slope> {
    Slope::from_str(s.trim()).map_err(|_| invalid(format!("`{s}` is not a fraction like -3/10")))
}

pub fn parse_q(s: &str) -> Result<Q> {
    Q::from_str(s.trim()).map_err(|_| invalid(format!("`{s}` is not a fraction like 1/20")))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| invalid(e.to_string()))
    }

    pub fn master_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// SHA-256 of the canonical JSON form of the config with the worker count and output directory
    /// removed, so those two never change result files.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.workers = None;
        c.out = None;
        let canonical = serde_json::to_string(&c).expect("configs always serialize");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn environment(&self) -> Result<&EnvironmentSpec> {
        let spec = self.environment.as_ref().ok_or_else(|| invalid("missing [environment] section"))?;
        spec.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(spec)
    }

    fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T> {
        s.as_ref().ok_or_else(|| invalid(format!("missing [{name}] section")))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("rwre-out"))
    }

    pub fn renorm_params(&self, r: u32) -> Result<RenormParams> {
        let s = Self::section(&self.renorm, "renorm")?;
        let schedule = ScaleSchedule::from_u64(s.l0, s.depth).map_err(|e| invalid(e.to_string()))?;
        let p = RenormParams::new(parse_q(&s.beta)?, parse_q(&s.v_minus)?, parse_q(&s.v_plus)?, r.max(1), schedule)
            .map_err(|e| invalid(e.to_string()))?;
        match &s.delta {
            Some(d) => p.with_delta(parse_q(d)?).map_err(|e| invalid(e.to_string())),
            None => Ok(p),
        }
    }
}

/// Seeds of one trial; with the config they replay it exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSeed {
    pub trial: u64,
    pub env_seed: u64,
    pub u_seed: u64,
    pub censored: bool,
}

impl TrialSeed {
    pub fn derive(master: u64, trial: u64, censored: bool) -> Self {
        TrialSeed {
            trial,
            env_seed: rng::derive_seed(master, &[trial as i64, 0]),
            u_seed: rng::derive_seed(master, &[trial as i64, 1]),
            censored,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CensoringSummary {
    pub total: u64,
    pub censored: u64,
    pub rate: f64,
}

impl CensoringSummary {
    pub fn new(total: u64, censored: u64) -> Self {
        let rate = if total == 0 { 0.0 } else { censored as f64 / total as f64 };
        CensoringSummary { total, censored, rate }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub tool_version: String,
    pub master_seed: u64,
    pub seed_rule: String,
    pub config: ExperimentConfig,
    pub trials: Vec<TrialSeed>,
    pub censoring: CensoringSummary,
    pub wall_clock_s: f64,
    pub files: Vec<String>,
}

/// What a command produced: files written and whether its checks passed.
#[derive(Clone, Debug, PartialEq)]
pub struct CommandOutcome {
    pub passed: bool,
    pub summary: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Exit status for an error: 2 for anything wrong with the configuration,
/// 1 for failures while running.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ConfigInvalid(_)
        | Error::InvalidSpec(_)
        | Error::InvalidParameter(_)
        | Error::InvalidGeometry(_)
        | Error::CostGuard(_)
        | Error::Overflow(_) => 2,
        _ => 1,
    }
}

struct Output {
    dir: PathBuf,
    hash: String,
    files: Vec<PathBuf>,
}

impl Output {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let dir = cfg.out_dir();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Output { dir, hash: cfg.hash(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &str, rows: &str) -> Result<()> {
        let body = format!("# config_hash={}\n{header}\n{rows}", self.hash);
        self.write(name, &body)
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value).expect("results always serialize");
        body.push('\n');
        self.write(name, &body)
    }

    fn finish(
        mut self,
        cfg: &ExperimentConfig,
        command: &str,
        trials: Vec<TrialSeed>,
        started: Instant,
        passed: bool,
        summary: Vec<String>,
    ) -> Result<CommandOutcome> {
        let censored = trials.iter().filter(|t| t.censored).count() as u64;
        let files = self.files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect();
        let manifest = RunManifest {
            command: command.into(),
            config_hash: self.hash.clone(),
            tool_version: TOOL_VERSION.into(),
            master_seed: cfg.master_seed(),
            seed_rule: "env_seed = derive_seed(master, [trial, 0]); u_seed = derive_seed(master, [trial, 1])".into(),
            config: cfg.clone(),
            censoring: CensoringSummary::new(trials.len() as u64, censored),
            trials,
            wall_clock_s: started.elapsed().as_secs_f64(),
            files,
        };
        self.json("manifest.json", &manifest)?;
        Ok(CommandOutcome { passed, summary, files: self.files })
    }
}

/// Runs `f` on a pool of `workers` threads (all cores when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(invalid("workers must be at least 1"));
        }
        b = b.num_threads(w);
    }
    let pool = b.build().map_err(|e| Error::InvalidState(e.to_string()))?;
    Ok(pool.install(f))
}

fn truth_str(t: Truth) -> &'static str {
    match t {
        Truth::True => "true",
        Truth::False => "false",
        Truth::Unknown => "unknown",
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Walks from `start` to relative height `h`, one JSONL block per walk.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let started = Instant::now();
    let spec = cfg.environment()?;
    let sec = ExperimentConfig::section(&cfg.simulate, "simulate")?;
    if sec.h < 0 || sec.walks == 0 {
        return Err(invalid("simulate needs walks >= 1 and h >= 0"));
    }
    let start = Site::new(sec.start[0], sec.start[1]);
    let window = shifted_window(sample_window(spec, sec.h), start);
    let master = cfg.master_seed();
    let runs = with_workers(cfg.workers, || {
        (0..sec.walks as u64)
            .into_par_iter()
            .map(|s| {
                let (env, u) = sample_fields(spec, master, s, window.clone())?;
                let mut w = Walk::new(start);
                match run_until_height(&mut w, &env, &u, sec.h, start.y, cfg.cap) {
                    Ok(run) => Ok((run.tau, run.path)),
                    Err(Error::WindowExceeded(_)) => Ok((None, crate::coupling::PathRecord::new(start))),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut out = Output::new(cfg)?;
    let mut jsonl = String::new();
    let mut csv = String::new();
    let mut trials = Vec::new();
    for (s, (tau, path)) in runs.iter().enumerate() {
        for line in path.to_jsonl().lines() {
            let mut v: serde_json::Value = serde_json::from_str(line).expect("own output parses");
            v["walk"] = serde_json::json!(s);
            jsonl.push_str(&serde_json::to_string(&v).unwrap());
            jsonl.push('\n');
        }
        let last = path.last();
        let _ = writeln!(csv, "{s},{},{},{},{}", opt(*tau), last.x, last.y, path.steps());
        trials.push(TrialSeed::derive(master, s as u64, tau.is_none()));
    }
    out.write("paths.jsonl", &jsonl)?;
    out.csv("walks.csv", "walk,tau,x,y,steps", &csv)?;
    let censored = trials.iter().filter(|t| t.censored).count();
    let summary = vec![format!("{} walks to height {}, {censored} censored", sec.walks, sec.h)];
    out.finish(cfg, "simulate", trials, started, true, summary)
}

fn shifted_window(w: Window, by: Site) -> Window {
    if w.is_unbounded() {
        return w;
    }
    Window::new(w.x.start + by.x..w.x.end + by.x, w.y.start + by.y..w.y.end + by.y)
}

/// `p^_H(v)` and `p~_H(v)` curves plus the `v-`, `v+` summary.
pub fn cmd_estimate_direction(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let started = Instant::now();
    let spec = cfg.environment()?;
    let sec = ExperimentConfig::section(&cfg.direction, "direction")?;
    if sec.h_list.is_empty() {
        return Err(invalid("direction.h_list is empty"));
    }
    let grid = slope_grid(parse_slope(&sec.v_min)?, parse_slope(&sec.v_max)?, parse_slope(&sec.v_step)?)
        .map_err(|e| invalid(e.to_string()))?;
    let vcfg = VpmConfig {
        h_list: sec.h_list.clone(),
        v_grid: grid,
        theta: sec.theta,
        samples: sec.samples,
        cap: cfg.cap,
        start: sec.start,
        seed: cfg.master_seed(),
    };
    let est = with_workers(cfg.workers, || estimate_v_pm(spec, &vcfg))?.map_err(|e| match e {
        Error::InvalidParameter(m) => invalid(m),
        e => e,
    })?;
    let mut out = Output::new(cfg)?;
    let mut rows = String::new();
    for st in &est.stats {
        st.csv_rows(&mut rows);
    }
    out.csv("direction.csv", DIRECTION_CSV_HEADER, &rows)?;
    let mut cross = String::new();
    for c in &est.crossings {
        let _ = writeln!(
            cross,
            "{},{},{},{},{},{},{},{}",
            c.h,
            opt(c.v_minus_exact),
            opt(c.v_plus_exact),
            opt(c.v_minus_grid),
            opt(c.v_plus_grid),
            c.mean_v,
            c.mean_v_se,
            c.censoring_rate
        );
    }
    out.csv("crossings.csv", "H,v_minus,v_plus,v_minus_grid,v_plus_grid,mean_v,mean_v_se,censoring", &cross)?;
    let summary_json = serde_json::json!({
        "config_hash": out.hash,
        "v_minus": est.v_minus.to_string(),
        "v_plus": est.v_plus.to_string(),
        "v_minus_f64": est.v_minus.to_f64(),
        "v_plus_f64": est.v_plus.to_f64(),
        "v_mean": est.v_mean,
        "v_mean_se": est.v_mean_se,
        "theta": sec.theta,
        "samples": sec.samples,
        "cap": cfg.cap,
        "crossings": est.crossings,
    });
    out.json("summary.json", &summary_json)?;
    let last = est.stats.last().expect("h_list is non-empty");
    let trials = last
        .samples
        .iter()
        .enumerate()
        .map(|(s, d)| TrialSeed::derive(cfg.master_seed(), s as u64, d.is_none()))
        .collect();
    let summary = vec![
        format!("v- = {} ({:.4}), v+ = {} ({:.4})", est.v_minus, est.v_minus.to_f64().unwrap_or(f64::NAN), est.v_plus, est.v_plus.to_f64().unwrap_or(f64::NAN)),
        format!("mean direction {:.4} +- {:.4}", est.v_mean, est.v_mean_se),
    ];
    out.finish(cfg, "estimate-direction", trials, started, true, summary)
}

/// Finite window for the scanned region when the family needs one.
fn scan_window(spec: &EnvironmentSpec, points: &[RefPoint], h: i64, reach: i64, beta: &Q) -> Window {
    if !matches!(spec.family, Family::BooleanPercolation { .. }) {
        return Window::unbounded();
    }
    let pad = (ceil_i64(beta) + 2) * (h + reach) + 16;
    let xs = points.iter().map(|p| p.x.floor().to_integer() as i64);
    let lo_x = xs.clone().min().unwrap_or(0) - pad;
    let hi_x = xs.max().unwrap_or(0) + pad;
    let lo_y = points.iter().map(|p| p.y).min().unwrap_or(0) - 16;
    let hi_y = points.iter().map(|p| p.y).max().unwrap_or(0) + h + reach + 16;
    Window::new(lo_x..hi_x, lo_y..hi_y)
}

fn ref_points(points: &[[i64; 2]]) -> Result<Vec<RefPoint>> {
    if points.is_empty() {
        return Err(invalid("no reference points"));
    }
    Ok(points.iter().map(|p| RefPoint::from(Site::new(p[0], p[1]))).collect())
}

pub fn cmd_trap_scan(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let started = Instant::now();
    let spec = cfg.environment()?;
    let sec = ExperimentConfig::section(&cfg.trap, "trap")?;
    let params = cfg.renorm_params(1)?;
    let points = ref_points(&sec.points)?;
    let window = scan_window(spec, &points, sec.h, 0, &params.beta);
    let master = cfg.master_seed();
    let reports = with_workers(cfg.workers, || {
        (0..sec.samples as u64)
            .into_par_iter()
            .map(|s| {
                let (env, u) = sample_fields(spec, master, s, window.clone())?;
                points.iter().map(|w| trap_scan(&env, &u, *w, sec.h, &params, cfg.cap)).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?
    .map_err(param_to_config)?;
    let mut out = Output::new(cfg)?;
    let mut rows = String::new();
    let mut counts = [0u64; 3];
    let mut trials = Vec::new();
    for (s, per) in reports.iter().enumerate() {
        let mut any_unknown = false;
        for r in per {
            let (wx, wy) = (r.w.x.to_integer(), r.w.y);
            let (rlo, rhi) = r.read_band.map(|(a, b)| (a.to_string(), b.to_string())).unwrap_or_default();
            let _ = writeln!(
                rows,
                "{s},{wx},{wy},{},{},{},{},{},{},{},{rlo},{rhi}",
                r.h,
                truth_str(r.verdict),
                opt(r.witness.map(|w| w.x)),
                opt(r.witness.map(|w| w.y)),
                r.unknown,
                r.band.0,
                r.band.1
            );
            counts[truth_index(r.verdict)] += 1;
            any_unknown |= r.verdict == Truth::Unknown;
        }
        trials.push(TrialSeed::derive(master, s as u64, any_unknown));
    }
    out.csv("trap.csv", "sample,w_x,w_y,H,verdict,witness_x,witness_y,unknown,band_lo,band_hi,read_lo,read_hi", &rows)?;
    let certified = counts[0] + counts[1];
    let freq = if certified == 0 { f64::NAN } else { counts[0] as f64 / certified as f64 };
    out.json(
        "summary.json",
        &serde_json::json!({
            "config_hash": out.hash,
            "H": sec.h,
            "delta": params.delta.to_string(),
            "trapped": counts[0], "not_trapped": counts[1], "unknown": counts[2],
            "trap_frequency_certified": freq,
        }),
    )?;
    let summary = vec![format!(
        "trapped {} / not {} / unknown {}; frequency among certified {:.4}",
        counts[0], counts[1], counts[2], freq
    )];
    out.finish(cfg, "trap-scan", trials, started, true, summary)
}

fn truth_index(t: Truth) -> usize {
    match t {
        Truth::True => 0,
        Truth::False => 1,
        Truth::Unknown => 2,
    }
}

fn param_to_config(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => invalid(m),
        e => e,
    }
}

pub fn cmd_threat_scan(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let started = Instant::now();
    let spec = cfg.environment()?;
    let sec = ExperimentConfig::section(&cfg.threat, "threat")?;
    let params = cfg.renorm_params(sec.r)?;
    let points = ref_points(&sec.points)?;
    let window = scan_window(spec, &points, sec.h, sec.h * sec.r as i64, &params.beta);
    let master = cfg.master_seed();
    let reports = with_workers(cfg.workers, || {
        (0..sec.samples as u64)
            .into_par_iter()
            .map(|s| {
                let (env, u) = sample_fields(spec, master, s, window.clone())?;
                points
                    .iter()
                    .map(|w| threat_scan(&env, &u, *w, sec.h, sec.r, &params, cfg.cap))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?
    .map_err(param_to_config)?;
    let mut out = Output::new(cfg)?;
    let mut rows = String::new();
    let mut per_r = vec![[0u64; 3]; sec.r as usize];
    let mut trials = Vec::new();
    for (s, per) in reports.iter().enumerate() {
        let mut any_unknown = false;
        for rep in per {
            for r in 1..=sec.r {
                let v = rep.verdict_at(r);
                per_r[r as usize - 1][truth_index(v)] += 1;
                let _ = writeln!(rows, "{s},{},{},{},{r},{}", rep.w.x.to_integer(), rep.w.y, rep.h, truth_str(v));
            }
            any_unknown |= rep.verdict == Truth::Unknown;
        }
        trials.push(TrialSeed::derive(master, s as u64, any_unknown));
    }
    out.csv("threat.csv", "sample,w_x,w_y,H,r,verdict", &rows)?;
    let by_r: Vec<_> = per_r
        .iter()
        .enumerate()
        .map(|(i, c)| serde_json::json!({ "r": i + 1, "threatened": c[0], "safe": c[1], "unknown": c[2] }))
        .collect();
    out.json("summary.json", &serde_json::json!({ "config_hash": out.hash, "H": sec.h, "by_r": by_r }))?;
    let summary = per_r
        .iter()
        .enumerate()
        .map(|(i, c)| format!("r = {}: threatened {} / safe {} / unknown {}", i + 1, c[0], c[1], c[2]))
        .collect();
    out.finish(cfg, "threat-scan", trials, started, true, summary)
}

pub fn cmd_density(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let started = Instant::now();
    let spec = cfg.environment()?;
    let sec = ExperimentConfig::section(&cfg.density, "density")?;
    let base = cfg.renorm_params(1)?;
    let schedule = base.schedule.clone();
    let scan_h = sec.h.checked_mul(schedule.big_l(sec.k1).map_err(param_to_config)?).ok_or_else(|| Error::Overflow("h L_k1".into()))?;
    let r = schedule.small_l(sec.k1).map_err(param_to_config)? as u32;
    let params = cfg.renorm_params(r)?;
    let y = Site::new(sec.start[0], sec.start[1]);
    let w = RefPoint::from(Site::new(sec.start[0], sec.start[1]));
    let span = sec.h.saturating_mul(schedule.big_l(sec.k).map_err(param_to_config)?) as i64;
    let window = scan_window(spec, &[w], span, scan_h as i64 * (r as i64 + 1), &params.beta);
    let master = cfg.master_seed();
    let reports = with_workers(cfg.workers, || {
        (0..sec.samples as u64)
            .into_par_iter()
            .map(|s| {
                let (env, u) = sample_fields(spec, master, s, window.clone())?;
                let oracle = ScanOracle { env: &env, u: &u, h: scan_h as i64, r, params: &params, cap: cfg.cap };
                threatened_density(&env, &u, y, w, sec.h, sec.k, sec.k1, &schedule, params.delta, &oracle, cfg.cap)
            })
            .collect::<Result<Vec<_>>>()
    })?
    .map_err(param_to_config)?;
    let mut out = Output::new(cfg)?;
    let mut rows = String::new();
    let mut dens = String::new();
    let mut trials = Vec::new();
    for (s, rep) in reports.iter().enumerate() {
        for c in &rep.checkpoints {
            let _ = writeln!(
                rows,
                "{s},{},{},{},{},{},{},{}",
                c.j,
                opt(c.tau),
                opt(c.position.map(|p| p.x)),
                opt(c.position.map(|p| p.y)),
                opt(c.rounded.map(|p| p.x)),
                opt(c.rounded.map(|p| p.y)),
                truth_str(c.verdict)
            );
        }
        let _ = writeln!(dens, "{s},{},{},{},{}", rep.threatened, rep.unknown, rep.total, rep.density.to_f64().unwrap_or(f64::NAN));
        trials.push(TrialSeed::derive(master, s as u64, rep.unknown > 0));
    }
    out.csv("density_checkpoints.csv", "sample,j,tau,x,y,rounded_x,rounded_y,verdict", &rows)?;
    out.csv("density.csv", "sample,threatened,unknown,total,density", &dens)?;
    let mean = reports.iter().map(|r| r.density.to_f64().unwrap_or(0.0)).sum::<f64>() / reports.len().max(1) as f64;
    out.json(
        "summary.json",
        &serde_json::json!({
            "config_hash": out.hash,
            "h": sec.h, "k": sec.k, "k1": sec.k1, "scan_h": scan_h, "r": r,
            "delta": params.delta.to_string(),
            "mean_density": mean,
        }),
    )?;
    let summary = vec![format!("{} samples, mean threatened density {:.4}", reports.len(), mean)];
    out.finish(cfg, "density", trials, started, true, summary)
}

/// Two stacked `width x height` boxes at each vertical gap.
pub fn stacked_pair(width: u32, height: u32, gap: i64) -> Result<BoxPair> {
    let (w, h) = (width as f64, height as f64);
    let b = RealBox::new(0.0, w, 0.0, h)?;
    let bp = RealBox::new(0.0, w, h + gap as f64, 2.0 * h + gap as f64)?;
    BoxPair::new(b, bp)
}

pub fn cmd_mixing_scan(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let started = Instant::now();
    let spec = cfg.environment()?;
    let sec = ExperimentConfig::section(&cfg.mixing, "mixing")?;
    if sec.separations.is_empty() || sec.width == 0 || sec.height == 0 {
        return Err(invalid("mixing needs separations and non-empty boxes"));
    }
    let master = cfg.master_seed();
    let rows = with_workers(cfg.workers, || {
        sec.separations
            .iter()
            .map(|&h| {
                let pair = stacked_pair(sec.width, sec.height, h).map_err(param_to_config)?;
                empirical_mixing_covariance(spec, &pair, &sec.f1, &sec.f2, sec.samples, rng::derive_seed(master, &[h]))
                    .map_err(param_to_config)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut out = Output::new(cfg)?;
    let mut csv = String::new();
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{},{},{}", r.sep, r.cov, r.std_error, r.mean_f1, r.mean_f2, r.n);
    }
    out.csv("mixing.csv", "sep,cov,se,mean_f1,mean_f2,n", &csv)?;
    out.json("summary.json", &serde_json::json!({ "config_hash": out.hash, "rows": rows }))?;
    let summary = rows.iter().map(|r| format!("sep {}: cov {:+.5} (se {:.5})", r.sep, r.cov, r.std_error)).collect();
    out.finish(cfg, "mixing-scan", Vec::new(), started, true, summary)
}

/// Runs the named suites (all when empty). Seeds and caps from the top level
/// of the config override the suites' own.
pub fn cmd_verify(cfg: &ExperimentConfig, suites: &[String]) -> Result<CommandOutcome> {
    let started = Instant::now();
    let names: Vec<String> = if suites.is_empty() {
        verify::suite_names().iter().map(|s| s.to_string()).collect()
    } else {
        suites.to_vec()
    };
    for n in &names {
        if !verify::suite_names().contains(&n.as_str()) {
            return Err(invalid(format!("unknown suite `{n}`; expected one of {:?}", verify::suite_names())));
        }
    }
    let sec = cfg.verify.clone().unwrap_or_default();
    let seed_for = |i: i64, own: u64| cfg.seed.map_or(own, |m| rng::derive_seed(m, &[i]));
    let mut out = Output::new(cfg)?;
    let mut reports: Vec<SuiteReport> = Vec::new();
    for name in &names {
        let report = with_workers(cfg.workers, || -> Result<(SuiteReport, Option<String>)> {
            match name.as_str() {
                "barrier" => {
                    let mut c = sec.barrier.clone().unwrap_or_default();
                    c.seed = seed_for(0, c.seed);
                    let res = verify::barrier_run(&verify::barrier_families(), &c)?;
                    let jsonl = res.verdicts_jsonl();
                    Ok((verify::barrier_report(&c, &res), Some(jsonl)))
                }
                "loops" => {
                    let mut c = sec.loops.clone().unwrap_or_default();
                    c.seed = seed_for(1, c.seed);
                    Ok((verify::loops_suite(&c)?, None))
                }
                "uniforms" => {
                    let mut c = sec.uniforms.clone().unwrap_or_default();
                    c.seed = seed_for(2, c.seed);
                    Ok((verify::uniforms_suite(&c)?, None))
                }
                "theta" => {
                    let mut c = sec.theta.clone().unwrap_or_default();
                    c.seed = seed_for(3, c.seed);
                    Ok((verify::theta_suite(&c)?, None))
                }
                "assumptions" => {
                    let mut c = sec.assumptions.clone().unwrap_or_default();
                    c.seed = seed_for(4, c.seed);
                    Ok((verify::assumptions_suite(&c)?, None))
                }
                _ => {
                    let mut c = sec.mixing.clone().unwrap_or_default();
                    c.seed = seed_for(5, c.seed);
                    Ok((verify::mixing_suite(&c)?, None))
                }
            }
        })??;
        if let Some(jsonl) = report.1 {
            out.write("barrier_verdicts.jsonl", &jsonl)?;
        }
        reports.push(report.0);
    }
    out.json("verify.json", &reports)?;
    let passed = reports.iter().all(|r| r.passed);
    let mut summary = Vec::new();
    for r in &reports {
        summary.push(format!("[{}] {}", if r.passed { "PASS" } else { "FAIL" }, r.suite));
        summary.extend(r.lines.iter().map(|l| format!("    {l}")));
    }
    out.finish(cfg, "verify", Vec::new(), started, passed, summary)
}
