//! Deterministic, splittable randomness.
//!
//! Every random draw in the crate flows through a [`ChaCha12Rng`] derived
//! from a master seed and a label path. Trials, retries and per-group
//! streams get disjoint paths, so results are independent of execution
//! order and of how work is distributed across threads.

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Stage labels used to separate streams inside a pipeline run.
pub mod label {
    pub const SAMPLE: u64 = 0x01;
    pub const FILTER: u64 = 0x02;
    pub const PROJECT: u64 = 0x03;
    pub const TRIAL: u64 = 0x10;
    pub const SLOPE: u64 = 0x11;
    pub const TARGET: u64 = 0x12;
    pub const WEIGHTS: u64 = 0x13;
    pub const PLANT: u64 = 0x14;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent generator from a master seed and a label path.
///
/// The path is mixed in element by element, so `derive(s, &[a])` and
/// `derive(s, &[a, b])` are unrelated streams.
pub fn derive(master: u64, path: &[u64]) -> ChaCha12Rng {
    let mut state = master ^ 0x6A09_E667_F3BC_C908;
    let mut acc = splitmix64(&mut state);
    for &p in path {
        state ^= p.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        acc ^= splitmix64(&mut state);
    }
    let mut seed = [0u8; 32];
    let mut s = acc;
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}

/// Uniform draw from `[0, 2^bits)`.
pub fn gen_biguint_below_pow2<R: Rng + ?Sized>(rng: &mut R, bits: u32) -> BigUint {
    if bits == 0 {
        return BigUint::default();
    }
    let mut limbs = Vec::with_capacity((bits as usize).div_ceil(32));
    let mut remaining = bits;
    while remaining >= 32 {
        limbs.push(rng.gen::<u32>());
        remaining -= 32;
    }
    if remaining > 0 {
        limbs.push(rng.gen::<u32>() & ((1u32 << remaining) - 1));
    }
    BigUint::new(limbs)
}

/// Uniform draw from `[1, 2^bits)`.
pub fn gen_biguint_nonzero_below_pow2<R: Rng + ?Sized>(rng: &mut R, bits: u32) -> BigUint {
    loop {
        let v = gen_biguint_below_pow2(rng, bits);
        if v != BigUint::default() {
            return v;
        }
    }
}
