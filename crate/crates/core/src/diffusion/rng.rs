//! Counter-based standard-normal generator.
//!
//! Algorithm, fixed so that every platform produces the same bits:
//!
//! * `mix(x)` is the SplitMix64 finalizer:
//!   `x ^= x >> 30; x *= 0xbf58476d1ce4e5b9; x ^= x >> 27; x *= 0x94d049bb133111eb; x ^= x >> 31`.
//! * A stream key is `mix(seed)`, or for a keyed stream
//!   `mix(mix(mix(seed) ^ a·G) ^ b·G)` with `G = 0x9e3779b97f4a7c15`.
//! * Word `n` of a stream is `mix(key + (n + 1)·G)` (wrapping arithmetic).
//! * Normal pair `i` uses words `2i` and `2i+1`:
//!   `u1 = ((w0 >> 11) + 1)·2⁻⁵³ ∈ (0, 1]`, `u2 = (w1 >> 11)·2⁻⁵³ ∈ [0, 1)`,
//!   `r = sqrt(−2 ln u1)`, giving `r·cos(2πu2)` then `r·sin(2πu2)`.
//!   `ln`, `cos` and `sin` come from the pure-Rust `libm` port.

use std::f64::consts::TAU;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

#[inline]
pub fn mix(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// A stateless stream of 64-bit words addressed by counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseStream {
    key: u64,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        NoiseStream { key: mix(seed) }
    }

    /// Independent stream for a `(seed, a, b)` triple, e.g. image index and
    /// timestep.
    pub fn keyed(seed: u64, a: u64, b: u64) -> Self {
        let k = mix(mix(seed) ^ a.wrapping_mul(GOLDEN));
        NoiseStream {
            key: mix(k ^ b.wrapping_mul(GOLDEN)),
        }
    }

    pub fn word(&self, n: u64) -> u64 {
        mix(self.key.wrapping_add(n.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)` from word `n`.
    pub fn uniform(&self, n: u64) -> f64 {
        (self.word(n) >> 11) as f64 * UNIT
    }

    /// The `j`-th standard normal of the stream.
    pub fn normal(&self, j: u64) -> f64 {
        let pair = j / 2;
        let u1 = ((self.word(2 * pair) >> 11) + 1) as f64 * UNIT;
        let u2 = (self.word(2 * pair + 1) >> 11) as f64 * UNIT;
        let r = (-2.0 * libm::log(u1)).sqrt();
        let theta = TAU * u2;
        if j.is_multiple_of(2) {
            r * libm::cos(theta)
        } else {
            r * libm::sin(theta)
        }
    }

    /// First `n` normals.
    pub fn normals(&self, n: usize) -> Vec<f64> {
        (0..n as u64).map(|j| self.normal(j)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // SplitMix64 seeded with 0: the first outputs are mix(G), mix(2G).
        let s = NoiseStream { key: 0 };
        assert_eq!(s.word(0), 0xe220_a839_7b1d_cdaf);
        assert_eq!(s.word(1), 0x6e78_9e6a_a1b9_65f4);
    }

    #[test]
    fn streams_are_pure_functions() {
        let a = NoiseStream::keyed(7, 3, 50);
        let b = NoiseStream::keyed(7, 3, 50);
        assert_eq!(a.normals(100), b.normals(100));
        assert_ne!(NoiseStream::keyed(7, 3, 51).normal(0), a.normal(0));
        assert_ne!(NoiseStream::keyed(7, 50, 3).normal(0), a.normal(0));
    }

    #[test]
    fn uniform_range() {
        let s = NoiseStream::new(1);
        for n in 0..10_000 {
            let u = s.uniform(n);
            assert!((0.0..1.0).contains(&u));
        }
    }
}
