use num_bigint::BigUint;
use num_integer::Roots;
use proptest::prelude::*;
use rwre::geometry::{
    fourth_root, h_prime, q, qi, round_point, sep, BoxGeometry, BoxPair, GridSpec, RealBox, RefPoint, ScaleSchedule,
};
use rwre::Site;

fn rb(a1: f64, b1: f64, a2: f64, b2: f64) -> RealBox {
    RealBox::new(a1, b1, a2, b2).unwrap()
}

#[test]
fn separation_examples() {
    let b = rb(0.0, 1.0, 0.0, 1.0);
    assert_eq!(sep(&b, &rb(5.0, 6.0, 3.0, 4.0)), 2.0);
    assert_eq!(sep(&b, &rb(0.0, 1.0, 0.5, 2.0)), 0.0);
    assert_eq!(sep(&b, &rb(0.0, 1.0, -4.0, -1.5)), 1.5);
    // horizontal offset does not count
    assert_eq!(sep(&b, &rb(100.0, 101.0, 0.0, 1.0)), 0.0);
    let pair = BoxPair::new(b, rb(0.0, 1.0, 7.0, 8.0)).unwrap();
    assert_eq!(pair.sep(), 6.0);
}

#[test]
fn invalid_boxes_rejected() {
    assert!(RealBox::new(1.0, 1.0, 0.0, 1.0).is_err());
    assert!(RealBox::new(0.0, 1.0, 2.0, 1.0).is_err());
    assert!(RealBox::new(0.0, f64::NAN, 0.0, 1.0).is_err());
}

#[test]
fn box_size_constraint() {
    let b = rb(0.0, 4.0, 0.0, 2.0);
    assert_eq!(b.diam(), 4.0);
    assert_eq!(b.height(), 2.0);
}

#[test]
fn half_open_membership() {
    let b = rb(0.0, 3.0, 0.0, 2.0);
    assert!(b.contains(Site::new(0, 0)));
    assert!(b.contains(Site::new(2, 1)));
    assert!(!b.contains(Site::new(3, 1)));
    assert!(!b.contains(Site::new(2, 2)));
    assert_eq!(b.sites().len(), 6);
    let frac = rb(0.5, 2.5, -0.5, 0.5);
    assert_eq!(frac.sites(), vec![Site::new(1, 0), Site::new(2, 0)]);
}

proptest! {
    #[test]
    fn separation_is_symmetric(a in -50i32..50, h in 1i32..10, c in -50i32..50, g in 1i32..10) {
        let b = rb(0.0, 1.0, a as f64, (a + h) as f64);
        let bp = rb(3.0, 4.0, c as f64, (c + g) as f64);
        prop_assert_eq!(sep(&b, &bp), sep(&bp, &b));
        prop_assert!(sep(&b, &bp) >= 0.0);
    }

    #[test]
    fn fourth_root_agrees_with_integer_roots(n in any::<u64>()) {
        let r = fourth_root(&BigUint::from(n));
        prop_assert_eq!(r, BigUint::from(n.nth_root(4)));
    }

    #[test]
    fn fourth_root_of_big_values(a in any::<u64>(), b in any::<u64>()) {
        let n = BigUint::from(a) * BigUint::from(b) + BigUint::from(b);
        let r = fourth_root(&n);
        prop_assert_eq!(&r, &n.nth_root(4));
    }

    #[test]
    fn round_point_is_an_idempotent_projection(x in -10_000i64..10_000, y in -10_000i64..10_000, h in 40i64..5000) {
        let delta = q(1, 10);
        let p = Site::new(x, y);
        let r = round_point(p, h, delta).unwrap();
        prop_assert_eq!(round_point(r, h, delta).unwrap(), r);
        let ht = (h / 40).max(1);
        let hp = h_prime(h as u64) as i64;
        prop_assert!(r.x <= x && x < r.x + ht);
        prop_assert!(r.y <= y && y < r.y + hp);
        prop_assert_eq!(r.x.rem_euclid(ht), 0);
        prop_assert_eq!(r.y.rem_euclid(hp), 0);
    }

    #[test]
    fn h_prime_is_ceiling_sqrt(h in 1u64..1_000_000_000_000) {
        let s = h_prime(h);
        prop_assert!(s * s >= h);
        prop_assert!((s - 1) * (s - 1) < h);
    }
}

#[test]
fn h_prime_examples() {
    assert_eq!(h_prime(9), 3);
    assert_eq!(h_prime(10), 4);
    assert_eq!(h_prime(1), 1);
    assert_eq!(h_prime(16), 4);
    assert_eq!(h_prime(17), 5);
}

#[test]
fn round_point_examples() {
    let d = q(1, 10);
    assert_eq!(round_point(Site::new(7, 5), 100, d).unwrap(), Site::new(6, 0));
    assert_eq!(round_point(Site::new(-1, -1), 100, d).unwrap(), Site::new(-2, -10));
    assert_eq!(round_point(Site::new(12, 10), 100, d).unwrap(), Site::new(12, 10));
    assert!(round_point(Site::ORIGIN, 39, d).is_err());
    assert!(round_point(Site::ORIGIN, 40, d).is_ok());
    assert!(round_point(Site::ORIGIN, 100, q(0, 1)).is_err());
}

#[test]
fn schedule_small_example() {
    let s = ScaleSchedule::from_u64(16, 2).unwrap();
    assert_eq!(s.small_l(0).unwrap(), 2);
    assert_eq!(s.big_l(1).unwrap(), 32);
    assert_eq!(s.small_l(1).unwrap(), 2);
    assert_eq!(s.big_l(2).unwrap(), 64);
    assert!(!s.is_degenerate());
}

#[test]
fn schedule_at_ten_to_the_ten() {
    let s = ScaleSchedule::from_u64(10_000_000_000, 3).unwrap();
    assert_eq!(s.small_l(0).unwrap(), 316);
    assert_eq!(s.big_l(1).unwrap(), 3_160_000_000_000);
    // independent recomputation with machine integers where they fit
    let mut big: u128 = 10_000_000_000;
    for k in 0..=3 {
        let l = (big as u64).nth_root(4) as u128;
        assert_eq!(s.small_l_exact(k), &BigUint::from(l));
        assert_eq!(s.big_l_exact(k), &BigUint::from(big));
        big *= l;
        if big > u64::MAX as u128 {
            break;
        }
    }
    let csv = s.to_csv();
    assert!(csv.starts_with("k,L_k,l_k\n0,10000000000,316\n1,3160000000000,"));
}

#[test]
fn schedule_overflow_is_reported() {
    let s = ScaleSchedule::from_u64(u64::MAX / 2, 2).unwrap();
    assert!(matches!(s.big_l(2), Err(rwre::Error::Overflow(_))));
    assert!(s.big_l_exact(2) > &BigUint::from(u64::MAX));
}

#[test]
fn degenerate_schedules_flagged() {
    let s = ScaleSchedule::from_u64(2, 3).unwrap();
    assert_eq!(s.degenerate_at(), Some(0));
    assert_eq!(s.big_l(3).unwrap(), 2);
    assert!(ScaleSchedule::from_u64(1, 3).is_err());
    assert!(ScaleSchedule::from_u64(16, 0).is_err());
}

#[test]
fn grid_ranges_are_exact() {
    let g = GridSpec::renormalization(16, 2, q(1, 2));
    assert_eq!(g.i_range, -1..3);
    assert_eq!(g.j_range, -(6 / 16)..2);
    assert_eq!(g.j_range, 0..2);
    let unit = GridSpec::renormalization(1, 1, qi(0));
    assert_eq!(unit.i_range, 0..1);
    assert_eq!(unit.j_range, -1..1);
}

#[test]
fn grid_cardinality_by_enumeration() {
    for (h, l, beta) in [(16, 2, q(1, 2)), (100, 3, q(3, 2)), (7, 5, q(1, 3)), (1, 4, qi(2))] {
        let g = GridSpec::renormalization(h, l, beta);
        let pts = g.points();
        assert_eq!(pts.len(), g.cardinality());
        let mut uniq = pts.clone();
        uniq.sort_by_key(|p| (p.y, p.x));
        uniq.dedup();
        assert_eq!(uniq.len(), pts.len());
    }
}

#[test]
fn grid_covers_the_big_box_on_coarse_rows() {
    for (h, l, beta) in [(16i64, 2i64, q(1, 2)), (9, 3, q(3, 2)), (25, 2, q(1, 3)), (4, 4, qi(1))] {
        let g = GridSpec::renormalization(h, l, beta);
        let big = BoxGeometry::new(RefPoint::origin(), qi(h * l), beta).unwrap();
        let pts = g.points();
        let lines: Vec<Vec<Site>> =
            pts.iter().map(|w| BoxGeometry::new(*w, qi(h), beta).unwrap().start_line()).collect();
        let top = h * l;
        for y in big.outer_y_range() {
            if y.rem_euclid(h) != 0 || y == top {
                continue;
            }
            for x in big.outer_x_range() {
                let s = Site::new(x, y);
                assert!(lines.iter().any(|line| line.contains(&s)), "H={h} l={l}: {s:?} uncovered");
            }
        }
    }
}

#[test]
fn box_geometry_sizes() {
    let g = BoxGeometry::new(RefPoint::new(q(1, 2), 3), qi(10), q(1, 2)).unwrap();
    assert_eq!(g.h_prime(), 4);
    assert_eq!(g.start_line().len(), 10);
    assert_eq!(g.start_line()[0], Site::new(1, 3));
    assert_eq!(g.start_box().len(), 40);
    assert_eq!(g.outer_y_range(), -1..14);
    assert_eq!(g.outer_x_range(), -4..16);
    assert_eq!(g.outer_diam(), qi(20));
    assert_eq!(g.outer_height(), qi(14));
    assert!(BoxGeometry::new(RefPoint::origin(), qi(0), qi(1)).is_err());
    assert!(BoxGeometry::new(RefPoint::origin(), qi(1), qi(-1)).is_err());
}
