//! Chronological loop decomposition of a random lattice path.

use rwre::path_algebra::{loop_decompose, LatticePath};
use rwre::verify::{naive_loop_erasure, random_path};

fn main() -> rwre::Result<()> {
    let sites = random_path(5, 0, 60);
    let path = LatticePath::new(sites.clone())?;
    let d = loop_decompose(&path);
    for (i, l) in d.loops.iter().enumerate() {
        println!("loop {i}: T_in {} T_out {} length {}", l.t_in, l.t_out, l.indices.len());
    }
    println!("residual: {} of {} indices", d.residual.len(), sites.len());
    d.check(&path)?;
    let (_, naive) = naive_loop_erasure(&sites);
    println!("matches repeated first-cycle deletion: {}", naive == d.residual);
    Ok(())
}
