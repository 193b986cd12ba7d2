mod common;

use common::{k, north};
use rwre::coupling::{run_until_height, History, PathRecord, UniformField, Walk};
use rwre::env::{PatchedField, Window};
use rwre::path_algebra::{classify_barrier, loop_decompose, LatticePath, Scenario, Witness};
use rwre::rng::Stream;
use rwre::{Error, Site};

fn lp(points: &[(i64, i64)]) -> LatticePath {
    LatticePath::new(points.iter().map(|&(x, y)| Site::new(x, y)).collect()).unwrap()
}

fn rec(points: &[(i64, i64)]) -> PathRecord {
    PathRecord { sites: points.iter().map(|&(x, y)| Site::new(x, y)).collect(), consumed: Vec::new() }
}

/// Chronological loop erasure on sites: on revisiting a site, cut back to
/// its earlier occurrence.
fn erased_sites(sites: &[Site]) -> Vec<Site> {
    let mut out: Vec<Site> = Vec::new();
    for &s in sites {
        if let Some(p) = out.iter().position(|&t| t == s) {
            out.truncate(p + 1);
        } else {
            out.push(s);
        }
    }
    out
}

fn check_invariants(p: &LatticePath) {
    let d = loop_decompose(p);
    d.check(p).unwrap();
    let mut all: Vec<usize> = d.residual.clone();
    for l in &d.loops {
        assert_eq!(p.sites()[l.t_in], p.sites()[l.t_out]);
        let mut seen = l.sites.clone();
        seen.sort_by_key(|s| (s.x, s.y));
        seen.dedup();
        assert_eq!(seen.len(), l.sites.len());
        all.extend(&l.indices);
    }
    all.sort();
    assert_eq!(all, (0..p.len()).collect::<Vec<_>>());
    let res = d.residual_sites(p);
    assert_eq!(res.first(), p.sites().first());
    assert_eq!(res.last(), p.sites().last());
    assert_eq!(res, erased_sites(p.sites()));
}

#[test]
fn single_loop_example() {
    let p = lp(&[(0, 0), (1, 0), (1, 1), (0, 1), (1, 1), (1, 2)]);
    let d = loop_decompose(&p);
    assert_eq!(d.loops.len(), 1);
    assert_eq!((d.loops[0].t_in, d.loops[0].t_out), (2, 4));
    assert_eq!(d.loops[0].indices, vec![2, 3]);
    assert_eq!(d.residual_sites(&p), vec![Site::new(0, 0), Site::new(1, 0), Site::new(1, 1), Site::new(1, 2)]);
    check_invariants(&p);
}

#[test]
fn self_avoiding_path_has_no_loops() {
    let p = lp(&[(0, 0), (0, 1), (1, 1), (2, 1), (2, 0)]);
    let d = loop_decompose(&p);
    assert!(d.loops.is_empty());
    assert_eq!(d.residual, (0..5).collect::<Vec<_>>());
}

#[test]
fn figure_eight_gives_two_loops() {
    // two unit squares sharing the origin
    let p = lp(&[(0, 0), (1, 0), (1, 1), (0, 1), (0, 0), (-1, 0), (-1, -1), (0, -1), (0, 0), (0, 1)]);
    let d = loop_decompose(&p);
    assert_eq!(d.loops.len(), 2);
    assert_eq!(d.loops[0].indices, vec![0, 1, 2, 3]);
    assert_eq!(d.loops[1].indices, vec![4, 5, 6, 7]);
    assert_eq!(d.residual_sites(&p), vec![Site::new(0, 0), Site::new(0, 1)]);
    check_invariants(&p);
}

#[test]
fn nested_loop_inside_a_loop() {
    let p = lp(&[(0, 0), (1, 0), (2, 0), (2, 1), (2, 0), (1, 0), (0, 0), (0, 1)]);
    let d = loop_decompose(&p);
    assert_eq!(d.loops.len(), 3);
    check_invariants(&p);
}

#[test]
fn random_walk_paths_match_erasure() {
    for seed in 0..500 {
        let mut s = Stream::new(seed, 0);
        let len = s.range(0, 300) as usize;
        let mut pts = vec![Site::ORIGIN];
        for _ in 0..len {
            let last = *pts.last().unwrap();
            let (dx, dy) = [(1, 0), (-1, 0), (0, 1), (0, -1)][s.range(0, 4) as usize];
            pts.push(Site::new(last.x + dx, last.y + dy));
        }
        check_invariants(&LatticePath::new(pts).unwrap());
    }
}

#[test]
fn single_site_and_backtrack() {
    check_invariants(&lp(&[(3, 3)]));
    let p = lp(&[(0, 0), (1, 0), (0, 0)]);
    let d = loop_decompose(&p);
    assert_eq!(d.residual_sites(&p), vec![Site::ORIGIN]);
    check_invariants(&p);
}

#[test]
fn non_neighbour_paths_rejected() {
    assert!(LatticePath::new(vec![]).is_err());
    assert!(LatticePath::new(vec![Site::ORIGIN, Site::ORIGIN]).is_err());
    assert!(LatticePath::new(vec![Site::ORIGIN, Site::new(2, 0)]).is_err());
}

fn walk_to(env: &impl rwre::env::KernelField, start: Site, gamma: History, target: i64) -> PathRecord {
    let u = UniformField::new(0);
    let mut w = Walk::with_history(start, gamma);
    run_until_height(&mut w, env, &u, target - start.y, start.y, 1000).unwrap().path
}

#[test]
fn deterministic_north_is_order_preserving() {
    let env = north().build(Window::unbounded()).unwrap();
    let left = walk_to(&env, Site::ORIGIN, History::new(), 6);
    let right = walk_to(&env, Site::new(3, 2), History::new(), 6);
    let v = classify_barrier(&left, &History::new(), &right, 6).unwrap();
    assert_eq!(v.scenario, Scenario::S3OrderPreserved);
    assert_eq!(v.witness, Witness::Final { left_x: 0, right_x: 3 });
}

#[test]
fn steered_left_walk_passes_below() {
    let mut env = PatchedField::new(north().build(Window::unbounded()).unwrap());
    env.set(Site::ORIGIN, k([1.0, 0.0, 0.0, 0.0]));
    let left = walk_to(&env, Site::ORIGIN, History::new(), 4);
    let right = walk_to(&env, Site::new(1, 2), History::new(), 4);
    assert_eq!(left.sites[1], Site::new(1, 0));
    let v = classify_barrier(&left, &History::new(), &right, 4).unwrap();
    assert_eq!(v.scenario, Scenario::S1LeftWalkPassesBelow);
    assert_eq!(v.witness, Witness::Step(1));
}

#[test]
fn steered_right_walk_passes_below() {
    let mut env = PatchedField::new(north().build(Window::unbounded()).unwrap());
    env.set(Site::new(2, -2), k([0.0, 1.0, 0.0, 0.0]));
    env.set(Site::new(1, -2), k([0.0, 1.0, 0.0, 0.0]));
    let left = walk_to(&env, Site::ORIGIN, History::new(), 3);
    let right = walk_to(&env, Site::new(2, -2), History::new(), 3);
    let v = classify_barrier(&left, &History::new(), &right, 3).unwrap();
    assert_eq!(v.scenario, Scenario::S2RightWalkPassesBelow);
    assert_eq!(v.witness, Witness::Step(2));
}

#[test]
fn crossed_records_are_violations() {
    // records that could never come from one coupling
    let left = rec(&[(0, 0), (1, 0), (2, 0), (2, 1), (2, 2)]);
    let right = rec(&[(1, 0), (1, 1), (1, 2)]);
    let v = classify_barrier(&left, &History::new(), &right, 2).unwrap();
    assert_eq!(v.scenario, Scenario::Violation);
    assert_eq!(v.witness, Witness::Final { left_x: 2, right_x: 1 });
}

#[test]
fn precedence_is_s1_first() {
    let left = rec(&[(0, 0), (1, 0), (1, 1), (1, 2), (1, 3)]);
    let right = rec(&[(1, 1), (0, 1), (0, 0), (0, -1), (0, 0), (0, 1), (0, 2), (0, 3)]);
    let v = classify_barrier(&left, &History::new(), &right, 3).unwrap();
    assert_eq!(v.scenario, Scenario::S1LeftWalkPassesBelow);
}

#[test]
fn precondition_breaches_are_configuration_errors() {
    let left = rec(&[(0, 0), (0, 1), (0, 2)]);
    let right = rec(&[(1, 0), (1, 1), (1, 2)]);
    let bad = |r: Result<_, Error>| matches!(r, Err(Error::InvalidConfiguration(_)));
    assert!(bad(classify_barrier(&right, &History::new(), &left, 2)));
    assert!(bad(classify_barrier(&left, &History::new(), &rec(&[(1, 2), (1, 3)]), 2)));
    assert!(bad(classify_barrier(&left, &History::from(vec![(Site::new(1, 1), 1)]), &right, 2)));
    assert!(bad(classify_barrier(&left, &History::new(), &right, 3)));
    assert!(classify_barrier(&left, &History::from(vec![(Site::new(5, -3), 1)]), &right, 2).is_ok());
}
