//! Canonical keys and the keyed Bernoulli draw that decides catalysis.
//!
//! A (reaction, catalyst) pair is catalyzed iff a uniform variate derived
//! from FNV-1a-64 over `seed_le_bytes ++ canonical_encode(pair)` falls below
//! `p`. The draw is a pure function of its inputs, so the realized chemistry
//! does not depend on the order in which species are discovered, and any
//! implementation of the same rule reproduces the same chemistry bit for bit.

use super::species::{ReactionTemplate, Species};

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Streaming FNV-1a-64 hasher. `Copy` so a shared prefix can be hashed once
/// and extended many times.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fnv1a64(u64);

impl Fnv1a64 {
    pub const fn new() -> Self {
        Fnv1a64(FNV_OFFSET_BASIS)
    }

    #[inline]
    pub fn write(&mut self, bytes: &[u8]) {
        let mut h = self.0;
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        self.0 = h;
    }

    #[inline]
    pub fn with(mut self, bytes: &[u8]) -> Self {
        self.write(bytes);
        self
    }

    pub fn finish(self) -> u64 {
        self.0
    }

    /// Hasher primed with the 8 little-endian bytes of `seed`.
    pub fn seeded(seed: u64) -> Self {
        Fnv1a64::new().with(&seed.to_le_bytes())
    }
}

impl Default for Fnv1a64 {
    fn default() -> Self {
        Self::new()
    }
}

/// Maps a 64-bit hash onto `[0, 1)` using its top 53 bits.
#[inline]
pub fn unit_interval(hash: u64) -> f64 {
    (hash >> 11) as f64 / (1u64 << 53) as f64
}

/// `"C|first|second|product|cat"` for condensations, `"X|substrate|left|right|cat"`
/// for cleavages.
pub fn canonical_encode(template: &ReactionTemplate, catalyst: &Species) -> Vec<u8> {
    let mut out = template_prefix(template);
    out.extend_from_slice(catalyst.as_str().as_bytes());
    out
}

/// Encoding of the template alone, including the trailing separator that
/// precedes the catalyst field.
pub fn template_prefix(template: &ReactionTemplate) -> Vec<u8> {
    let (kind, f1, f2, f3) = match template {
        ReactionTemplate::Cleavage {
            substrate,
            left,
            right,
            ..
        } => ("X", substrate, left, right),
        ReactionTemplate::Condensation {
            first,
            second,
            product,
        } => ("C", first, second, product),
    };
    format!("{kind}|{f1}|{f2}|{f3}|").into_bytes()
}

/// Reference draw: hashes the full byte string in one pass.
pub fn catalysis_draw(
    chem_seed: u64,
    template: &ReactionTemplate,
    catalyst: &Species,
    p: f64,
) -> bool {
    let h = Fnv1a64::seeded(chem_seed)
        .with(&canonical_encode(template, catalyst))
        .finish();
    unit_interval(h) < p
}
