mod common;

use common::{k, north, spec};
use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use rwre::coupling::{UniformField, UniformSource};
use rwre::env::{EnvironmentSpec, Family, PatchedField, Window};
use rwre::estimators::{
    calibrate_beta, estimate_ph, estimate_v_pm, fit_power_decay, fit_power_decay_values, rho_sequence, slope_grid,
    tau_tail, threat_scan, threatened_density, trap_scan, DirectionConfig, RenormParams, Slope, StartSet, Truth,
    VpmConfig,
};
use rwre::geometry::{q, qi, RefPoint, ScaleSchedule, Q};
use rwre::{Error, Site};

fn s(n: i64, d: i64) -> Slope {
    Ratio::new(n, d)
}

fn params(beta: Q, vm: Q, vp: Q, r: u32) -> RenormParams {
    RenormParams::new(beta, vm, vp, r, ScaleSchedule::from_u64(100, 2).unwrap()).unwrap()
}

#[test]
fn deterministic_north_exceedance_is_a_step() {
    let cfg = DirectionConfig {
        h: 16,
        v_grid: slope_grid(s(-1, 2), s(1, 2), s(1, 4)).unwrap(),
        samples: 30,
        cap: 1000,
        start: StartSet::Box,
        seed: 1,
    };
    let st = estimate_ph(&north(), &cfg).unwrap();
    let p: Vec<f64> = (0..st.v_grid.len()).map(|i| st.p_hat(i)).collect();
    assert_eq!(p, vec![1.0, 1.0, 1.0, 0.0, 0.0]);
    let pt: Vec<f64> = (0..st.v_grid.len()).map(|i| st.p_tilde(i)).collect();
    assert_eq!(pt, vec![0.0, 0.0, 1.0, 1.0, 1.0]);
    assert_eq!(st.v_plus_exact(0.05), Some(s(0, 1)));
    assert_eq!(st.v_minus_exact(0.05), Some(s(0, 1)));
    assert_eq!(st.v_plus_grid(0.05), Some(s(1, 4)));
    assert_eq!(st.v_minus_grid(0.05), Some(s(-1, 4)));
    assert_eq!(st.censored, 0);
}

#[test]
fn exceedance_is_monotone_and_saturates() {
    let sp = spec(Family::IidSite { weights: vec![0.5, 0.5] });
    let cfg = DirectionConfig {
        h: 20,
        v_grid: slope_grid(s(-3, 1), s(3, 1), s(1, 10)).unwrap(),
        samples: 300,
        cap: 100_000,
        start: StartSet::Box,
        seed: 2,
    };
    let st = estimate_ph(&sp, &cfg).unwrap();
    for i in 1..st.v_grid.len() {
        assert!(st.p_hat(i) <= st.p_hat(i - 1));
        assert!(st.p_tilde(i) >= st.p_tilde(i - 1));
    }
    assert!(st.p_hat(0) >= 0.99);
    assert!(st.p_tilde(st.v_grid.len() - 1) >= 0.99);
    let (vm, vp) = (st.v_minus_exact(0.05).unwrap(), st.v_plus_exact(0.05).unwrap());
    assert!(vm <= vp);
    // exact order statistics agree with a direct count
    let n = st.certified as f64;
    assert!((st.count_at(vp) as f64) >= 0.0 && (st.count_at(vp + s(1, 1_000_000)) as f64) < 0.05 * n);
}

#[test]
fn mirror_symmetric_kernel_gives_symmetric_directions() {
    let sp = EnvironmentSpec::constant(k([0.25, 0.25, 0.4, 0.1]));
    let cfg = VpmConfig {
        h_list: vec![32],
        v_grid: slope_grid(s(-2, 1), s(2, 1), s(1, 20)).unwrap(),
        theta: 0.1,
        samples: 1000,
        cap: 100_000,
        start: StartSet::Origin,
        seed: 3,
    };
    let e = estimate_v_pm(&sp, &cfg).unwrap();
    assert!(e.v_minus <= e.v_plus);
    let gap = e.v_plus + e.v_minus;
    assert!(s(-1, 4) <= gap && gap <= s(1, 4), "v- = {}, v+ = {}", e.v_minus, e.v_plus);
    assert!(e.v_mean.abs() <= 4.0 * e.v_mean_se);
}

#[test]
fn theta_out_of_range_rejected() {
    let cfg = VpmConfig {
        h_list: vec![8],
        v_grid: slope_grid(s(0, 1), s(1, 1), s(1, 2)).unwrap(),
        theta: 0.5,
        samples: 10,
        cap: 100,
        start: StartSet::Origin,
        seed: 0,
    };
    assert!(estimate_v_pm(&north(), &cfg).is_err());
    assert!(estimate_v_pm(&north(), &VpmConfig { h_list: vec![], theta: 0.1, ..cfg }).is_err());
}

#[test]
fn decay_fit_degenerate_and_synthetic() {
    let f = fit_power_decay(&[8.0, 16.0, 32.0], &[0, 0, 0], &[100, 100, 100], Some(3.0)).unwrap();
    assert!(f.degenerate_zero && f.slope.is_none());
    assert_eq!(f.benchmark, Some(-0.75));
    let hs = [4.0, 8.0, 16.0, 32.0, 64.0];
    let ps: Vec<f64> = hs.iter().map(|h: &f64| h.powi(-2)).collect();
    let f = fit_power_decay_values(&hs, &ps).unwrap();
    assert!((f.slope.unwrap() + 2.0).abs() < 1e-9);
    let g = fit_power_decay(&[8.0, 16.0, 32.0], &[50, 10, 0], &[1000, 1000, 1000], None).unwrap();
    assert_eq!(g.one_sided, vec![false, false, true]);
    assert!(g.slope.unwrap() < 0.0);
    assert!(fit_power_decay_values(&[1.0, 2.0], &[0.5, 0.25]).is_err());
}

#[test]
fn tau_tail_decays_under_strong_drift() {
    let sp = EnvironmentSpec::constant(k([0.1, 0.1, 0.7, 0.1]));
    let tail = tau_tail(&sp, q(2, 1), &[8, 16, 32, 64], 2000, 100_000, 4).unwrap();
    for w in tail.windows(2) {
        assert!(w[1].1 <= w[0].1, "{tail:?}");
    }
    let hs: Vec<f64> = tail.iter().map(|t| t.0 as f64).collect();
    let counts: Vec<u64> = tail.iter().map(|t| (t.1 * 2000.0).round() as u64).collect();
    let fit = fit_power_decay(&hs, &counts, &[2000; 4], None).unwrap();
    assert!(fit.slope.unwrap() < 0.0);
}

#[test]
fn beta_calibration_matches_drift() {
    let sp = EnvironmentSpec::constant(k([0.1, 0.1, 0.7, 0.1]));
    let b = calibrate_beta(&sp, 100, 500, 100_000, 5).unwrap();
    assert!((b.speed - 0.6).abs() < 0.03);
    assert!(b.beta * Q::from(1000) == (b.beta * Q::from(1000)).floor());
    assert!(b.beta >= q(1500, 1000) / q((b.speed * 1e6) as i128, 1_000_000) - q(1, 1000));
}

#[test]
fn renorm_params_delta() {
    let p = params(qi(1), qi(-1), qi(1), 1);
    assert_eq!(p.delta, q(1, 5));
    let p = params(q(1, 2), q(-1, 2), q(1, 2), 1);
    assert_eq!(p.delta, q(2, 15));
    let sched = || ScaleSchedule::from_u64(100, 1).unwrap();
    assert!(RenormParams::new(qi(1), qi(0), qi(0), 1, sched()).is_err());
    assert!(RenormParams::new(qi(1), qi(-2), qi(0), 1, sched()).is_err());
    assert!(RenormParams::new(qi(1), qi(0), qi(1), 0, sched()).is_err());
    assert!(p.clone().with_delta(qi(0)).is_err());
    assert!(p.clone().with_delta(q(3, 5)).is_err());
    assert_eq!(p.with_delta(q(1, 2)).unwrap().delta, q(1, 2));
}

#[test]
fn north_walks_are_trapped_when_bound_allows() {
    let env = north().build(Window::unbounded()).unwrap();
    let u = UniformField::new(0);
    // delta = 1/20, bound v- + delta = 1/20 >= 0
    let p = params(qi(1), qi(0), q(1, 2), 1);
    let t = trap_scan(&env, &u, RefPoint::origin(), 100, &p, 10_000).unwrap();
    assert_eq!(t.verdict, Truth::True);
    assert!(t.candidates.iter().all(|c| c.v == Some(s(0, 1))));
    assert_eq!(t.z_w, RefPoint::new(qi(5) + qi(40), 20));
    assert_eq!(t.candidates.len(), 5 * 3);
    // bound -1/2 + 1/10 < 0
    let p = params(qi(1), q(-1, 2), q(1, 2), 1);
    let t = trap_scan(&env, &u, RefPoint::origin(), 100, &p, 10_000).unwrap();
    assert_eq!(t.verdict, Truth::False);
}

#[test]
fn dipping_walks_are_not_trapped() {
    let env = EnvironmentSpec::constant(k([0.0, 0.0, 0.0, 1.0])).build(Window::unbounded()).unwrap();
    let u = UniformField::new(0);
    let p = params(qi(1), qi(0), q(1, 2), 1);
    let t = trap_scan(&env, &u, RefPoint::origin(), 100, &p, 10_000).unwrap();
    assert_eq!(t.verdict, Truth::False);
    assert!(t.candidates.iter().all(|c| c.stays_in_band == Truth::False));
}

#[test]
fn trap_scan_preconditions() {
    let env = north().build(Window::unbounded()).unwrap();
    let u = UniformField::new(0);
    let p = params(qi(1), qi(0), q(1, 2), 1);
    assert!(trap_scan(&env, &u, RefPoint::origin(), 79, &p, 100).is_err());
    assert!(trap_scan(&env, &u, RefPoint::origin(), 80, &p, 100).is_ok());
}

#[test]
fn censored_scans_are_unknown() {
    let env = EnvironmentSpec::constant(k([0.5, 0.5, 0.0, 0.0])).build(Window::unbounded()).unwrap();
    let u = UniformField::new(0);
    let p = params(qi(1), qi(0), q(1, 2), 1);
    let t = trap_scan(&env, &u, RefPoint::origin(), 100, &p, 50).unwrap();
    assert_eq!(t.verdict, Truth::Unknown);
    assert_eq!(t.unknown, t.candidates.len());
}

#[test]
fn trap_reads_only_its_band() {
    let sp = spec(Family::IidSite { weights: vec![0.5, 0.5] });
    let p = params(qi(1), q(-1, 10), q(1, 2), 1);
    for seed in 0..10 {
        let env = sp.with_seed(seed).build(Window::unbounded()).unwrap();
        let u = UniformField::new(seed);
        let w = RefPoint::new(q(3, 2), 7);
        let t = trap_scan(&env, &u, w, 100, &p, 100_000).unwrap();
        let (lo, hi) = t.read_band.unwrap();
        assert!(t.band.0 <= lo && hi <= t.band.1, "{:?} outside {:?}", t.read_band, t.band);
        // scramble everything outside the band
        let mut patched = PatchedField::new(sp.with_seed(seed).build(Window::unbounded()).unwrap());
        for x in -200..300 {
            for y in (t.band.0 - 15..t.band.0).chain(t.band.1 + 1..t.band.1 + 15) {
                patched.set(Site::new(x, y), k([0.0, 0.0, 0.0, 1.0]));
            }
        }
        let u2 = rwre::coupling::FnUniforms(|x: Site, i: u64| {
            if x.y < t.band.0 || x.y > t.band.1 {
                0.123
            } else {
                u.uniform(x, i)
            }
        });
        let t2 = trap_scan(&patched, &u2, w, 100, &p, 100_000).unwrap();
        assert_eq!(t.candidates, t2.candidates);
    }
}

#[test]
fn traps_occur_in_random_environments() {
    let sp = spec(Family::IidSite { weights: vec![0.5, 0.5] });
    let p = params(qi(1), q(1, 5), q(2, 5), 1).with_delta(q(1, 10)).unwrap();
    let mut found = 0;
    for seed in 0..40 {
        let env = sp.with_seed(seed).build(Window::unbounded()).unwrap();
        let t = trap_scan(&env, &UniformField::new(seed), RefPoint::origin(), 100, &p, 100_000).unwrap();
        found += t.found() as u32;
    }
    assert!(found > 0);
}

#[test]
fn threats_grow_with_range() {
    let sp = spec(Family::IidSite { weights: vec![0.5, 0.5] });
    let p = params(qi(1), q(1, 10), q(2, 5), 4).with_delta(q(1, 10)).unwrap();
    let mut not_threatened = [0u32; 4];
    for seed in 0..30 {
        let env = sp.with_seed(seed).build(Window::unbounded()).unwrap();
        let u = UniformField::new(seed);
        let th = threat_scan(&env, &u, RefPoint::origin(), 100, 4, &p, 100_000).unwrap();
        let one = trap_scan(&env, &u, RefPoint::origin(), 100, &p, 100_000).unwrap();
        assert_eq!(th.verdict_at(1), one.verdict);
        for r in 1..4 {
            if th.verdict_at(r) == Truth::True {
                assert_eq!(th.verdict_at(r + 1), Truth::True);
            }
        }
        for r in 1..=4 {
            not_threatened[r as usize - 1] += (th.verdict_at(r) == Truth::False) as u32;
        }
        assert_eq!(th.traps[1].w, RefPoint::new(qi(100) * q(2, 5), 100));
    }
    for i in 1..4 {
        assert!(not_threatened[i] <= not_threatened[i - 1]);
    }
    let env = north().build(Window::unbounded()).unwrap();
    assert!(threat_scan(&env, &UniformField::new(0), RefPoint::origin(), 100, 0, &p, 10).is_err());
}

fn density_with(oracle: impl Fn(RefPoint) -> Truth) -> rwre::estimators::DensityReport {
    let env = north().build(Window::unbounded()).unwrap();
    let sched = ScaleSchedule::from_u64(100, 3).unwrap();
    threatened_density(&env, &UniformField::new(0), Site::ORIGIN, RefPoint::origin(), 1, 2, 0, &sched, q(1, 10), &oracle, 10_000)
        .unwrap()
}

#[test]
fn density_with_injected_oracles() {
    let all = density_with(|_| Truth::True);
    assert_eq!(all.total, 4);
    assert_eq!(all.density, Ratio::new(1, 1));
    let none = density_with(|_| Truth::False);
    assert_eq!(none.density, Ratio::new(0, 1));
    let some = density_with(|w: RefPoint| Truth::from_bool(w.y < 800));
    assert_eq!(some.density, Ratio::new(3, 4));
    let heights: Vec<i64> = some.checkpoints.iter().map(|c| c.position.unwrap().y).collect();
    assert_eq!(heights, vec![0, 300, 600, 900]);
    let unk = density_with(|w: RefPoint| if w.y == 0 { Truth::Unknown } else { Truth::True });
    assert_eq!(unk.unknown_fraction, Ratio::new(1, 4));
}

#[test]
fn density_parameter_checks() {
    let env = north().build(Window::unbounded()).unwrap();
    let u = UniformField::new(0);
    let f = |_: RefPoint| Truth::True;
    let sched = ScaleSchedule::from_u64(100, 3).unwrap();
    let call = |k: usize, k1: usize, y: Site, s: &ScaleSchedule| {
        threatened_density(&env, &u, y, RefPoint::origin(), 1, k, k1, s, q(1, 10), &f, 100)
    };
    assert!(call(1, 1, Site::ORIGIN, &sched).is_err());
    assert!(call(2, 0, Site::new(0, 35), &sched).is_err());
    let big = ScaleSchedule::from_u64(10_000_000_000, 2).unwrap();
    assert!(matches!(call(1, 0, Site::ORIGIN, &big), Err(Error::CostGuard(_))));
}

#[test]
fn rho_sequence_values() {
    let r = rho_sequence(&ScaleSchedule::from_u64(10_000_000_000, 2).unwrap(), 0, 1).unwrap();
    let expected = BigRational::new(BigInt::from(311), BigInt::from(316));
    assert_eq!(r.values[1], expected);
    assert!(r.stays_above_half && !r.divergent);
    let huge = ScaleSchedule::new(&BigUint::from(10u32).pow(40u32), 3).unwrap();
    let r = rho_sequence(&huge, 0, 3).unwrap();
    let last = r.values.last().unwrap();
    assert!(*last > BigRational::new(BigInt::from(999_999_999), BigInt::from(1_000_000_000)));
    let r = rho_sequence(&ScaleSchedule::from_u64(16, 2).unwrap(), 0, 1).unwrap();
    assert!(!r.stays_above_half);
    let r = rho_sequence(&ScaleSchedule::from_u64(2, 2).unwrap(), 0, 1).unwrap();
    assert!(r.divergent);
    assert!(rho_sequence(&ScaleSchedule::from_u64(100, 1).unwrap(), 0, 3).is_err());
}

#[test]
fn truth_algebra() {
    use Truth::*;
    assert_eq!(True.and(Unknown), Unknown);
    assert_eq!(False.and(Unknown), False);
    assert_eq!(Truth::any([False, Unknown]), Unknown);
    assert_eq!(Truth::any([Unknown, True]), True);
    assert_eq!(Truth::any([]), False);
}
