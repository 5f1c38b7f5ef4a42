//! Shared index-coding primitives: Elias-gamma bit codes, the bijection
//! between bit strings and naturals, Cantor pairing, and the Calkin-Wilf
//! bijection between naturals and rationals.
//!
//! Scheme versions are frozen; changing any of them invalidates every stored
//! program index and combo index. Current version: v1.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::rat::Rational;

/// Append the Elias-gamma code of `v >= 1` to `bits` (LSB-last order:
/// `bits[i]` is the `i`-th emitted bit).
pub fn gamma_encode(bits: &mut Vec<bool>, v: &BigUint) {
    assert!(!v.is_zero(), "gamma code is defined for v >= 1");
    let len = v.bits();
    for _ in 0..len - 1 {
        bits.push(false);
    }
    for i in (0..len).rev() {
        bits.push(v.bit(i));
    }
}

/// Read one gamma code starting at `*pos`; advances `*pos` past it.
pub fn gamma_decode(bits: &[bool], pos: &mut usize) -> Option<BigUint> {
    let mut zeros = 0usize;
    while *pos < bits.len() && !bits[*pos] {
        zeros += 1;
        *pos += 1;
    }
    if *pos >= bits.len() {
        return None;
    }
    // The leading 1 plus `zeros` more bits.
    let mut v = BigUint::one();
    *pos += 1;
    for _ in 0..zeros {
        if *pos >= bits.len() {
            return None;
        }
        v <<= 1;
        if bits[*pos] {
            v |= BigUint::one();
        }
        *pos += 1;
    }
    Some(v)
}

/// Bijection between finite bit strings and naturals: `s <-> bin(1s) - 1`.
/// The empty string maps to 0.
pub fn bits_to_nat(bits: &[bool]) -> BigUint {
    let mut digits = Vec::with_capacity(bits.len() + 1);
    digits.push(1u8);
    digits.extend(bits.iter().map(|&b| b as u8));
    BigUint::from_radix_be(&digits, 2).expect("binary digits") - BigUint::one()
}

/// Inverse of [`bits_to_nat`].
pub fn nat_to_bits(n: &BigUint) -> Vec<bool> {
    let m = n + BigUint::one();
    let digits = m.to_radix_be(2);
    digits[1..].iter().map(|&d| d == 1).collect()
}

/// Cantor pairing `(x, y) -> (x+y)(x+y+1)/2 + y`, a bijection on naturals.
pub fn cantor_pair(x: &BigUint, y: &BigUint) -> BigUint {
    let s = x + y;
    (&s * (&s + BigUint::one())) / BigUint::from(2u32) + y
}

/// Inverse of [`cantor_pair`].
pub fn cantor_unpair(z: &BigUint) -> (BigUint, BigUint) {
    // s = floor((sqrt(8z+1) - 1) / 2)
    let t: BigUint = (z << 3) + BigUint::one();
    let s = (t.sqrt() - BigUint::one()) / BigUint::from(2u32);
    let tri = (&s * (&s + BigUint::one())) / BigUint::from(2u32);
    let y = z - tri;
    let x = &s - &y;
    (x, y)
}

/// The `n`-th positive rational in Calkin-Wilf (breadth-first) order, `n >= 0`:
/// 1, 1/2, 2, 1/3, 3/2, 2/3, 3, ...
pub fn calkin_wilf(n: &BigUint) -> Rational {
    // Heap position n+1; descend the tree reading bits below the leading one.
    let pos = n + BigUint::one();
    let mut p = BigInt::one();
    let mut q = BigInt::one();
    let len = pos.bits();
    for i in (0..len - 1).rev() {
        if pos.bit(i) {
            p += &q; // right child (a+b)/b
        } else {
            q += &p; // left child a/(a+b)
        }
    }
    Rational::new(p, q).expect("denominator is positive")
}

/// Inverse of [`calkin_wilf`]; the input must be a positive rational.
pub fn calkin_wilf_index(r: &Rational) -> BigUint {
    assert!(r.is_positive(), "Calkin-Wilf enumerates positive rationals");
    let mut p = r.numer().magnitude().clone();
    let mut q = r.denom().magnitude().clone();
    let mut rev_bits = Vec::new();
    while !(p.is_one() && q.is_one()) {
        if p > q {
            rev_bits.push(true);
            p -= &q;
        } else {
            rev_bits.push(false);
            q -= &p;
        }
    }
    let mut pos = BigUint::one();
    for b in rev_bits.into_iter().rev() {
        pos <<= 1;
        if b {
            pos |= BigUint::one();
        }
    }
    pos - BigUint::one()
}

/// Bijection naturals <-> rationals: 0 -> 0, odd -> positive, even -> negative.
pub fn rational_bijection(n: &BigUint) -> Rational {
    if n.is_zero() {
        return Rational::from_int(0);
    }
    let (half, rem) = (n - BigUint::one()).div_rem(&BigUint::from(2u32));
    let pos = calkin_wilf(&half);
    if rem.is_zero() {
        pos
    } else {
        -pos
    }
}

/// Inverse of [`rational_bijection`].
pub fn rational_bijection_index(r: &Rational) -> BigUint {
    if r.is_zero() {
        return BigUint::zero();
    }
    let k = calkin_wilf_index(&r.abs());
    let base: BigUint = &k * BigUint::from(2u32) + BigUint::one();
    if r.is_positive() {
        base
    } else {
        base + BigUint::one()
    }
}
