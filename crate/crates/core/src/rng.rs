//! Counter-based random streams.
//!
//! Every draw is addressed by `(seed, replicate, component, t)`: the ChaCha8
//! key is derived from `(seed, replicate)`, the stream id is the component and
//! the word position is a fixed slot of four 32-bit words per time index. A
//! value therefore never depends on the window it is read through, on the
//! order of evaluation, or on the number of threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Offset that maps `t ∈ [−2^40, 2^40)` to nonnegative slots.
const T_OFFSET: i64 = 1 << 40;
const WORDS_PER_SLOT: u128 = 4;

fn key(seed: u64, replicate: u64) -> [u8; 32] {
    let mut k = [0u8; 32];
    k[..8].copy_from_slice(&seed.to_le_bytes());
    k[8..16].copy_from_slice(&replicate.to_le_bytes());
    k[16..24].copy_from_slice(b"innovatn");
    k
}

/// Sequential reader over consecutive time slots of one component stream.
pub struct SlotReader {
    rng: ChaCha8Rng,
}

impl SlotReader {
    pub fn new(seed: u64, replicate: u64, component: u64, t_start: i64) -> Self {
        assert!(
            (-T_OFFSET..T_OFFSET).contains(&t_start),
            "time index {t_start} outside the addressable range"
        );
        let mut rng = ChaCha8Rng::from_seed(key(seed, replicate));
        rng.set_stream(component);
        rng.set_word_pos((t_start + T_OFFSET) as u128 * WORDS_PER_SLOT);
        SlotReader { rng }
    }

    /// The two 64-bit words of the next slot.
    #[inline]
    pub fn next_slot(&mut self) -> [u64; 2] {
        [self.rng.next_u64(), self.rng.next_u64()]
    }
}

/// The slot at `(seed, replicate, component, t)`.
pub fn slot(seed: u64, replicate: u64, component: u64, t: i64) -> [u64; 2] {
    SlotReader::new(seed, replicate, component, t).next_slot()
}

/// Uniform on `(0, 1]` with 53 random bits.
#[inline]
pub fn unit_open(u: u64) -> f64 {
    ((u >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform on `[0, 1)` with 53 random bits.
#[inline]
pub fn unit(u: u64) -> f64 {
    (u >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Two independent standard normals from one slot (Box–Muller).
#[inline]
pub fn normal_pair(s: [u64; 2]) -> (f64, f64) {
    let r = (-2.0 * unit_open(s[0]).ln()).sqrt();
    let (sin, cos) = (2.0 * std::f64::consts::PI * unit(s[1])).sin_cos();
    (r * cos, r * sin)
}

/// Independent seed for the `k`-th random source of a run (splitmix64 finalizer).
pub fn sub_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slots_are_addressable() {
        let mut reader = SlotReader::new(3, 1, 2, -5);
        let seq: Vec<[u64; 2]> = (0..10).map(|_| reader.next_slot()).collect();
        for (i, s) in seq.iter().enumerate() {
            assert_eq!(*s, slot(3, 1, 2, -5 + i as i64));
        }
    }

    #[test]
    fn streams_differ() {
        assert_ne!(slot(0, 0, 0, 0), slot(0, 0, 1, 0));
        assert_ne!(slot(0, 0, 0, 0), slot(0, 1, 0, 0));
        assert_ne!(slot(0, 0, 0, 0), slot(1, 0, 0, 0));
        assert_ne!(slot(0, 0, 0, 0), slot(0, 0, 0, 1));
    }

    #[test]
    fn normal_moments() {
        let mut reader = SlotReader::new(11, 0, 0, 0);
        let n = 200_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let (a, b) = normal_pair(reader.next_slot());
            s1 += a + b;
            s2 += a * a + b * b;
        }
        let m = 2.0 * n as f64;
        assert!((s1 / m).abs() < 0.01);
        assert!((s2 / m - 1.0).abs() < 0.01);
    }
}
