//! Input generators shared by the benchmarks.

use oglasses_core::{Label, Sample};

/// Deterministic pseudo-random bytes (xorshift), no RNG crate needed.
pub fn noise(len: usize, mut state: u64) -> Vec<u8> {
    (0..len)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 24) as u8
        })
        .collect()
}

/// A run of common 32-bit prologue and body encodings.
pub fn synthetic_code(len: usize) -> Vec<u8> {
    const PATTERN: &[u8] = &[
        0x55, 0x89, 0xE5, 0x83, 0xEC, 0x10, 0x8B, 0x45, 0x08, 0x01, 0xD0, 0xC7, 0x45, 0xFC, 0x00,
        0x00, 0x00, 0x00, 0xE8, 0x10, 0x00, 0x00, 0x00, 0x8D, 0x44, 0x24, 0x04, 0xC9, 0xC3,
    ];
    PATTERN.iter().copied().cycle().take(len).collect()
}

pub fn samples(n: usize) -> Vec<Sample> {
    (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Program } else { Label::Others };
            Sample::from_slice(label, &noise(256, i as u64 + 1)).expect("256 bytes")
        })
        .collect()
}
