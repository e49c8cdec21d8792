//! Small arbitrary-precision helpers shared across modules.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// 2^bits as a `BigUint`.
pub fn pow2(bits: u64) -> BigUint {
    BigUint::one() << bits
}

/// Keep the low `bits` bits of `x`, i.e. `x mod 2^bits`.
pub fn mod_pow2(x: &BigUint, bits: u64) -> BigUint {
    if x.bits() <= bits {
        return x.clone();
    }
    let mask = pow2(bits) - BigUint::one();
    x & &mask
}

/// log2 of a positive integer, accurate to f64 precision for any size.
pub fn log2(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "log2 of zero");
    let bits = x.bits();
    if bits <= 53 {
        return x.to_f64().expect("small value").log2();
    }
    let shift = bits - 53;
    let top = (x >> shift).to_f64().expect("53-bit mantissa");
    top.log2() + shift as f64
}

/// `x / 2^bits` as a float in [0, 1) for `x < 2^bits`.
pub fn ratio_of_pow2(x: &BigUint, bits: u64) -> f64 {
    debug_assert!(x.bits() <= bits);
    if x.is_zero() {
        return 0.0;
    }
    let xb = x.bits();
    if bits <= 60 {
        return x.to_f64().expect("small value") / 2f64.powi(bits as i32);
    }
    // Align the top 53 bits so the quotient stays in f64 range.
    let shift = xb.saturating_sub(53);
    let top = (x >> shift).to_f64().expect("53-bit mantissa");
    top * 2f64.powi(shift as i32 - bits as i32)
}

/// Smallest m with m·m ≥ n.
pub fn ceil_sqrt(n: u32) -> u32 {
    let mut m = (n as f64).sqrt().floor() as u32;
    while m * m < n {
        m += 1;
    }
    while m > 0 && (m - 1) * (m - 1) >= n {
        m -= 1;
    }
    m
}
