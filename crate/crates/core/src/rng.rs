//! Deterministic random streams.
//!
//! Every Monte Carlo path owns a stream derived from `(seed, index)`, so
//! results never depend on how paths are distributed over workers.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Xoshiro256++ stream tagged with the master seed and the key it was
/// derived from.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: Xoshiro256PlusPlus,
    seed: u64,
    key: u64,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::keyed(seed, 0)
    }

    /// Stream for path `index` under master `seed`.
    pub fn for_path(seed: u64, index: u64) -> Self {
        Self::keyed(seed, splitmix(index ^ 0x5EED_0000_0000_0001))
    }

    /// Deterministic child stream number `k` of this stream's key.
    /// Does not advance `self`.
    pub fn split(&self, k: u64) -> Self {
        Self::keyed(self.seed, splitmix(self.key ^ splitmix(k.wrapping_add(1))))
    }

    fn keyed(seed: u64, key: u64) -> Self {
        let state = splitmix(seed) ^ key.rotate_left(17) ^ splitmix(key);
        RandomStream {
            rng: Xoshiro256PlusPlus::seed_from_u64(state),
            seed,
            key,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl RngCore for RandomStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_key_same_sequence() {
        let mut a = RandomStream::for_path(42, 7);
        let mut b = RandomStream::for_path(42, 7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_paths_and_splits_differ() {
        let a = RandomStream::for_path(42, 7).next_u64_copy();
        let b = RandomStream::for_path(42, 8).next_u64_copy();
        let c = RandomStream::for_path(43, 7).next_u64_copy();
        let s = RandomStream::for_path(42, 7);
        let d = s.split(0).next_u64_copy();
        let e = s.split(1).next_u64_copy();
        let all = [a, b, c, d, e];
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                assert_ne!(all[i], all[j]);
            }
        }
    }

    #[test]
    fn uniform_mean_is_half() {
        let mut r = RandomStream::new(1);
        let n = 100_000;
        let m: f64 = (0..n).map(|_| r.random::<f64>()).sum::<f64>() / n as f64;
        assert!((m - 0.5).abs() < 4.0 * (1.0 / 12.0f64 / n as f64).sqrt());
    }

    trait Peek {
        fn next_u64_copy(self) -> u64;
    }
    impl Peek for RandomStream {
        fn next_u64_copy(mut self) -> u64 {
            self.next_u64()
        }
    }
}
