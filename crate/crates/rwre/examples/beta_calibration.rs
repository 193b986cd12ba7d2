//! Calibrating the ballisticity slope beta and checking `tau_H >= beta H`.

use rwre::estimators::{calibrate_beta, tau_tail};
use rwre::verify::barrier_families;

fn main() -> rwre::Result<()> {
    let spec = &barrier_families()[0];
    let cal = calibrate_beta(spec, 64, 1000, 100_000, 8)?;
    println!("speed {:.4}, beta = {}, censored {}", cal.speed, cal.beta, cal.censored);
    for (h, frac) in tau_tail(spec, cal.beta, &[8, 16, 32, 64], 1000, 100_000, 9)? {
        println!("H = {h:>2}: P(tau_H >= beta H) = {frac:.4}");
    }
    Ok(())
}
