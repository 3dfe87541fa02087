//! Counter-based uniforms: every row gets its draw by hashing its identity, so the
//! result does not depend on evaluation order or on how rows are partitioned.

use serde::Serialize;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// 2^-52
const UNIT: f64 = 1.0 / (1u64 << 52) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct SeedContext {
    pub seed: u64,
    pub replicate: u64,
}

impl SeedContext {
    pub fn new(seed: u64, replicate: u64) -> Self {
        SeedContext { seed, replicate }
    }

    pub fn with_replicate(self, replicate: u64) -> Self {
        SeedContext { replicate, ..self }
    }
}

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maps a 64-bit word onto the open interval (0, 1): `((x >> 12) + 0.5) * 2^-52`.
///
/// 52 bits, not 53: `(2^53 - 1) + 0.5` is not representable and would round
/// the top word to exactly 1.0.
#[inline]
pub fn open_unit(x: u64) -> f64 {
    ((x >> 12) as f64 + 0.5) * UNIT
}

#[derive(Clone, Copy)]
struct Absorber(u64);

impl Absorber {
    fn start(ctx: SeedContext) -> Self {
        Absorber(mix64(ctx.seed ^ GOLDEN)).word(ctx.replicate)
    }

    #[inline]
    fn word(self, w: u64) -> Self {
        Absorber(mix64(self.0.wrapping_add(GOLDEN) ^ w))
    }

    /// Length-prefixed so that ("ab", "c") and ("a", "bc") differ.
    fn bytes(self, bytes: &[u8]) -> Self {
        let mut state = self.word(bytes.len() as u64);
        let mut chunks = bytes.chunks_exact(8);
        for chunk in &mut chunks {
            state = state.word(u64::from_le_bytes(chunk.try_into().unwrap()));
        }
        let rest = chunks.remainder();
        if !rest.is_empty() {
            let mut buf = [0u8; 8];
            buf[..rest.len()].copy_from_slice(rest);
            state = state.word(u64::from_le_bytes(buf));
        }
        state
    }
}

/// Uniform draw for the row `(group_id, label)` at its first version.
pub fn derive_uniform(ctx: SeedContext, group_id: &str, label: &str) -> f64 {
    derive_uniform_versioned(ctx, 0, group_id, label)
}

/// Uniform draw for a row that has been rewritten `version` times.
pub fn derive_uniform_versioned(ctx: SeedContext, version: u64, group_id: &str, label: &str) -> f64 {
    let state = Absorber::start(ctx)
        .word(version)
        .bytes(group_id.as_bytes())
        .bytes(label.as_bytes());
    open_unit(state.0)
}

/// Uniform draw indexed by integers rather than row identity, for experiments
/// that need plain i.i.d. streams. Occupies the version slot with `u64::MAX`,
/// a version no row reaches.
pub fn uniform_at(ctx: SeedContext, stream: u64, index: u64) -> f64 {
    let state = Absorber::start(ctx).word(u64::MAX).word(stream).word(index);
    open_unit(state.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn mix64_matches_reference_splitmix() {
        // SplitMix64 seeded with 0: the first output finalizes 0x9E3779B97F4A7C15.
        assert_eq!(mix64(GOLDEN), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn open_unit_stays_inside() {
        assert_eq!(open_unit(0), 0.5 * UNIT);
        assert!(open_unit(u64::MAX) < 1.0);
        assert_eq!(open_unit(u64::MAX), 1.0 - 0.5 * UNIT);
    }

    #[test]
    fn deterministic_and_replicate_sensitive() {
        let a = derive_uniform(SeedContext::new(1, 0), "g", "a");
        assert_eq!(a, derive_uniform(SeedContext::new(1, 0), "g", "a"));
        assert_ne!(a, derive_uniform(SeedContext::new(1, 1), "g", "a"));
        assert_ne!(a, derive_uniform(SeedContext::new(2, 0), "g", "a"));
        assert_ne!(a, derive_uniform_versioned(SeedContext::new(1, 0), 1, "g", "a"));
    }

    #[test]
    fn field_boundaries_are_unambiguous() {
        let ctx = SeedContext::new(7, 3);
        assert_ne!(derive_uniform(ctx, "ab", "c"), derive_uniform(ctx, "a", "bc"));
        assert_ne!(derive_uniform(ctx, "g", ""), derive_uniform(ctx, "", "g"));
    }

    #[test]
    fn no_collisions_across_many_labels() {
        let ctx = SeedContext::new(0, 0);
        let set: HashSet<u64> = (0..100_000)
            .map(|i| derive_uniform(ctx, "group", &format!("label-{i}")).to_bits())
            .collect();
        assert_eq!(set.len(), 100_000);
    }
}
