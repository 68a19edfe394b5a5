//! Deterministic skip-ahead random streams.
//!
//! Every property table and structure generator draws from its own stream,
//! keyed by the master seed and a table tag (e.g. `"Person.country"`).
//! Streams are counter-based: the i-th draw is a pure function of
//! `(derived_seed, i)`, so any single value can be regenerated in O(1)
//! without replaying the sequence. The mixing function and increment are
//! those of splitmix64, which makes `value_at(s, i)` bit-identical to the
//! i-th output of the classic sequential generator seeded with
//! `derived_seed`.

/// The splitmix64 sequence increment (2^64 / golden ratio).
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// The splitmix64 finalizer. Full-avalanche 64-bit mix.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Identifies one independent random stream: a master seed plus the tag of
/// the table the stream feeds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub table_tag: String,
}

impl StreamKey {
    pub fn new(master_seed: u64, table_tag: impl Into<String>) -> Self {
        Self { master_seed, table_tag: table_tag.into() }
    }
}

/// A stateless random stream; all draws are pure functions of the derived
/// seed and the index, so a stream can be copied and shared freely across
/// threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomStream {
    derived_seed: u64,
}

/// Derives the stream for a key. Equal keys give equal streams; distinct
/// tags under the same master seed give statistically independent streams.
pub fn derive_stream(key: &StreamKey) -> RandomStream {
    RandomStream { derived_seed: mix64(key.master_seed ^ fnv1a64(key.table_tag.as_bytes())) }
}

impl RandomStream {
    /// Shorthand for [`derive_stream`] without building a [`StreamKey`].
    pub fn derive(master_seed: u64, table_tag: &str) -> Self {
        derive_stream(&StreamKey::new(master_seed, table_tag))
    }

    pub fn derived_seed(&self) -> u64 {
        self.derived_seed
    }

    /// The i-th 64-bit draw of the stream, in O(1).
    #[inline]
    pub fn value_at(&self, i: u64) -> u64 {
        mix64(self.derived_seed.wrapping_add(i.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }

    /// The i-th draw scaled to the unit interval `[0, 1)`.
    ///
    /// Uses the top 53 bits so the result is exactly representable and
    /// strictly below 1.
    #[inline]
    pub fn unit_at(&self, i: u64) -> f64 {
        to_unit(self.value_at(i))
    }

    /// The i-th draw reduced to `[0, bound)` without modulo bias
    /// (fixed-point multiply-shift reduction).
    #[inline]
    pub fn bounded_at(&self, i: u64, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((u128::from(self.value_at(i)) * u128::from(bound)) >> 64) as u64
    }
}

/// Maps a 64-bit draw to `[0, 1)`: the draw divided by 2^64, truncated to
/// f64 precision.
#[inline]
pub fn to_unit(draw: u64) -> f64 {
    (draw >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A uniform random permutation of `0..n`, deterministic in the stream.
/// Fisher-Yates with one bounded draw per position.
pub fn seeded_permutation(stream: &RandomStream, n: u64) -> Vec<u64> {
    let mut perm: Vec<u64> = (0..n).collect();
    for i in (1..n).rev() {
        let j = stream.bounded_at(n - 1 - i, i + 1);
        perm.swap(i as usize, j as usize);
    }
    perm
}
