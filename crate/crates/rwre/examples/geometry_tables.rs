//! Exact scale schedule, box separations, H' and rounded points.

use rwre::geometry::{h_prime, q, round_point, sep, GridSpec, RealBox, ScaleSchedule};
use rwre::Site;

fn main() -> rwre::Result<()> {
    let schedule = ScaleSchedule::from_u64(10_000_000_000, 3)?;
    print!("{}", schedule.to_csv());
    let small = ScaleSchedule::from_u64(100, 6)?;
    println!("L_0 = 100 degenerates at k = {:?}", small.degenerate_at());

    let b = RealBox::new(0.0, 2.0, 0.0, 2.0)?;
    for bp in [RealBox::new(5.0, 6.0, 0.0, 1.0)?, RealBox::new(0.0, 1.0, 7.0, 8.0)?, RealBox::new(4.0, 5.0, 6.0, 9.0)?] {
        println!("sep({b:?}, {bp:?}) = {}", sep(&b, &bp));
    }
    for h in [1u64, 4, 9, 100, 1000] {
        println!("H = {h}: H' = {}", h_prime(h));
    }
    let delta = q(1, 4);
    for y in [Site::new(7, 5), Site::new(-7, -5), Site::new(33, 21)] {
        println!("round({y:?}) at H = 64, delta = 1/4: {:?}", round_point(y, 64, delta)?);
    }
    let grid = GridSpec::renormalization(100, 3, q(2, 1));
    println!("renormalization grid: {} points, i in {:?}, j in {:?}", grid.cardinality(), grid.i_range, grid.j_range);
    Ok(())
}
