//! Per-trial seed derivation.

/// Weyl increment of splitmix64 (odd, so `i ↦ master + γ(i+1)` is injective mod 2⁶⁴).
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `mix64(master + γ·(index + 1))`: the `index`-th output of a splitmix64
/// stream started at `master`.
///
/// Both steps are bijections on `u64`, so distinct indices under one master
/// never collide.
pub fn derive_trial_seed(master: u64, index: u64) -> u64 {
    mix64(master.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1))))
}
