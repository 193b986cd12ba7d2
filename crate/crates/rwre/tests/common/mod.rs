#![allow(dead_code)]

use rwre::env::{EnvironmentSpec, Family};
use rwre::kernel::TransitionKernel;

pub fn k(p: [f64; 4]) -> TransitionKernel {
    TransitionKernel::new(p).unwrap()
}

pub fn two_kernels() -> Vec<TransitionKernel> {
    vec![k([0.3, 0.1, 0.4, 0.2]), k([0.1, 0.3, 0.4, 0.2])]
}

pub fn spec(family: Family) -> EnvironmentSpec {
    EnvironmentSpec::new(family, two_kernels(), 0).unwrap()
}

pub fn north() -> EnvironmentSpec {
    EnvironmentSpec::constant(k([0.0, 0.0, 1.0, 0.0]))
}

/// Sample covariance of two paired 0/1 sequences.
pub fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n
}
