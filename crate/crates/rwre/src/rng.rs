//! Counter-based keyed hashing. Every random quantity in the crate is a pure
//! function of `(seed, tag, coordinates)`, so fields can be re-read in any
//! order and from any thread.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const ODD: u64 = 0xD6E8_FEB8_6659_FD93;

/// Role tags keep the streams used for different purposes disjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Tag {
    Uniform = 1,
    SiteState = 2,
    PoissonCount = 3,
    PoissonPoint = 4,
    Gaussian = 5,
    FactorNoise = 6,
    RowState = 7,
    RowRefresh = 8,
    Derive = 9,
    Trial = 10,
}

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn hash(seed: u64, tag: Tag, words: &[i64]) -> u64 {
    let mut h = mix64(seed ^ GOLDEN);
    h = mix64(h.wrapping_mul(ODD) ^ (tag as u64).wrapping_add(GOLDEN));
    for &w in words {
        h = mix64(h.wrapping_mul(ODD) ^ (w as u64).wrapping_add(GOLDEN));
    }
    h
}

/// Top 53 bits mapped to `[0, 1)`.
#[inline]
pub fn to_unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn uniform(seed: u64, tag: Tag, words: &[i64]) -> f64 {
    to_unit(hash(seed, tag, words))
}

/// Child seed for sub-experiment `words` of `master`.
pub fn derive_seed(master: u64, words: &[i64]) -> u64 {
    hash(master, Tag::Derive, words)
}

/// Box-Muller normal keyed by `(seed, tag, words)`.
pub fn standard_normal(seed: u64, tag: Tag, words: &[i64]) -> f64 {
    let base = hash(seed, tag, words);
    let u1 = 1.0 - to_unit(mix64(base ^ 0x5851_F42D_4C95_7F2D));
    let u2 = to_unit(mix64(base ^ 0x1405_7B7E_F767_814F));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Inverse-CDF Poisson draw from a single uniform.
pub fn poisson_inverse(lambda: f64, u: f64) -> u64 {
    let mut p = (-lambda).exp();
    let mut cdf = p;
    let mut k = 0u64;
    while u >= cdf {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
        if p < f64::MIN_POSITIVE && k as f64 > lambda {
            break;
        }
    }
    k
}

/// Sequential stream over a keyed hash, for samplers that draw a variable
/// number of values per trial.
#[derive(Clone, Debug)]
pub struct Stream {
    seed: u64,
    key: i64,
    counter: i64,
}

impl Stream {
    pub fn new(seed: u64, key: i64) -> Self {
        Stream { seed, key, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        hash(self.seed, Tag::Trial, &[self.key, self.counter])
    }

    pub fn next_f64(&mut self) -> f64 {
        to_unit(self.next_u64())
    }

    /// Uniform integer in `lo..hi` (requires `lo < hi`).
    pub fn range(&mut self, lo: i64, hi: i64) -> i64 {
        let span = (hi - lo) as u64;
        lo + ((self.next_u64() as u128 * span as u128) >> 64) as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_and_tag_separated() {
        assert_eq!(hash(3, Tag::Uniform, &[1, 2, 3]), hash(3, Tag::Uniform, &[1, 2, 3]));
        assert_ne!(hash(3, Tag::Uniform, &[1, 2, 3]), hash(3, Tag::SiteState, &[1, 2, 3]));
        assert_ne!(hash(3, Tag::Uniform, &[1, 2, 3]), hash(4, Tag::Uniform, &[1, 2, 3]));
        assert_ne!(hash(3, Tag::Uniform, &[1, 2]), hash(3, Tag::Uniform, &[2, 1]));
    }

    #[test]
    fn unit_range() {
        assert_eq!(to_unit(0), 0.0);
        assert!(to_unit(u64::MAX) < 1.0);
    }

    #[test]
    fn poisson_small_cases() {
        let p0 = (-2.0f64).exp();
        assert_eq!(poisson_inverse(2.0, 0.0), 0);
        assert_eq!(poisson_inverse(2.0, p0 * 0.999), 0);
        assert_eq!(poisson_inverse(2.0, p0 * 1.001), 1);
        let n = 200_000;
        let mean: f64 = (0..n)
            .map(|i| poisson_inverse(3.5, uniform(9, Tag::PoissonCount, &[i])) as f64)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 3.5).abs() < 0.03, "{mean}");
    }

    #[test]
    fn normal_moments() {
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|i| standard_normal(1, Tag::Gaussian, &[i])).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
        assert!(m.abs() < 0.01 && (v - 1.0).abs() < 0.02, "{m} {v}");
    }

    #[test]
    fn stream_range_bounds() {
        let mut s = Stream::new(5, 0);
        for _ in 0..1000 {
            let k = s.range(-3, 4);
            assert!((-3..4).contains(&k));
        }
    }
}
